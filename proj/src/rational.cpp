#include "netid/rational.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace netid {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc()) throw std::invalid_argument("bad number: '" + s + "'");
    return v;
}

std::string format_coeff_list(const std::vector<double>& v) {
    std::string out = "[";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v[i]);
    }
    out += "]";
    return out;
}

std::vector<double> parse_coeff_list(const std::string& s) {
    auto l = s.find('[');
    auto r = s.rfind(']');
    if (l == std::string::npos || r == std::string::npos || r < l)
        throw std::invalid_argument("bad coefficient list: '" + s + "'");
    std::vector<double> out;
    std::string body = s.substr(l + 1, r - l - 1);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(parse_double(item));
    }
    return out;
}

RationalTransfer::RationalTransfer() : num_(), den_({1.0}), delay_(0) {}

RationalTransfer::RationalTransfer(Polynomial num, Polynomial den, int delay, double cancel_tol)
    : num_(std::move(num)), den_(std::move(den)), delay_(delay) {
    if (delay_ < 0) throw std::invalid_argument("RationalTransfer: negative delay");
    if (den_.is_zero()) throw std::invalid_argument("invalid transfer: zero denominator");
    if (den_.at(0) == 0.0)
        throw std::invalid_argument(
            "invalid transfer: denominator constant term is zero (not proper)");
    canonicalize(cancel_tol);
}

RationalTransfer RationalTransfer::constant(double g) {
    return RationalTransfer(Polynomial{g}, Polynomial::one());
}

RationalTransfer RationalTransfer::unit_delay() {
    return RationalTransfer(Polynomial::one(), Polynomial::one(), 1);
}

void RationalTransfer::canonicalize(double cancel_tol) {
    if (num_.is_zero()) {
        num_ = Polynomial();
        den_ = Polynomial::one();
        delay_ = 0;
        return;
    }
    // Fold leading numerator zeros into the delay.
    std::vector<double> nc = num_.coeffs();
    size_t lead = 0;
    while (lead < nc.size() && nc[lead] == 0.0) ++lead;
    if (lead > 0) {
        nc.erase(nc.begin(), nc.begin() + static_cast<long>(lead));
        delay_ += static_cast<int>(lead);
        num_ = Polynomial(std::move(nc));
    }
    // Cancel near-coincident root pairs.
    if (cancel_tol > 0.0 && num_.degree() > 0 && den_.degree() > 0) {
        auto nr = num_.roots_in_q();
        auto dr = den_.roots_in_q();
        std::vector<bool> used(dr.size(), false);
        std::vector<std::complex<double>> keep_n;
        bool cancelled = false;
        for (const auto& r : nr) {
            bool matched = false;
            for (size_t i = 0; i < dr.size(); ++i) {
                if (used[i]) continue;
                if (std::abs(r - dr[i]) <= cancel_tol * std::max(1.0, std::abs(dr[i]))) {
                    used[i] = true;
                    matched = true;
                    cancelled = true;
                    break;
                }
            }
            if (!matched) keep_n.push_back(r);
        }
        if (cancelled) {
            std::vector<std::complex<double>> keep_d;
            for (size_t i = 0; i < dr.size(); ++i)
                if (!used[i]) keep_d.push_back(dr[i]);
            num_ = Polynomial::from_roots_in_q(keep_n, num_.at(0));
            den_ = Polynomial::from_roots_in_q(keep_d, den_.at(0));
        }
    }
    // Unit denominator constant term.
    const double d0 = den_.at(0);
    num_ = num_.scaled(1.0 / d0);
    den_ = den_.scaled(1.0 / d0);
}

std::complex<double> RationalTransfer::at(double omega) const {
    const std::complex<double> x = std::polar(1.0, -omega);
    const std::complex<double> d = den_.eval(x);
    if (std::abs(d) < 1e-300 * std::max(1.0, den_.max_abs_coeff()) || std::abs(d) == 0.0)
        throw std::runtime_error("pole on unit circle at omega=" + format_double(omega));
    const std::complex<double> shift = std::polar(1.0, -omega * static_cast<double>(delay_));
    return shift * num_.eval(x) / d;
}

std::vector<std::complex<double>> RationalTransfer::freq_response(
    const std::vector<double>& omega_grid) const {
    std::vector<std::complex<double>> out(omega_grid.size());
    for (size_t i = 0; i < omega_grid.size(); ++i) {
        if (!std::isfinite(omega_grid[i]))
            throw std::invalid_argument("freq_response: non-finite frequency");
        out[i] = at(omega_grid[i]);
    }
    return out;
}

RationalTransfer RationalTransfer::operator+(const RationalTransfer& o) const {
    if (is_zero()) return o;
    if (o.is_zero()) return *this;
    const int d = std::min(delay_, o.delay_);
    Polynomial a = num_.shifted(delay_ - d) * o.den_;
    Polynomial b = o.num_.shifted(o.delay_ - d) * den_;
    return RationalTransfer(a + b, den_ * o.den_, d);
}

RationalTransfer RationalTransfer::operator-(const RationalTransfer& o) const {
    return *this + o.scaled(-1.0);
}

RationalTransfer RationalTransfer::operator*(const RationalTransfer& o) const {
    if (is_zero() || o.is_zero()) return RationalTransfer();
    return RationalTransfer(num_ * o.num_, den_ * o.den_, delay_ + o.delay_);
}

RationalTransfer RationalTransfer::scaled(double s) const {
    if (s == 0.0 || is_zero()) return RationalTransfer();
    return RationalTransfer(num_.scaled(s), den_, delay_);
}

RationalTransfer RationalTransfer::reciprocal() const {
    if (is_zero()) throw std::invalid_argument("reciprocal of zero transfer");
    if (delay_ != 0 || num_.at(0) == 0.0)
        throw std::invalid_argument("reciprocal is not proper (numerator has a delay)");
    return RationalTransfer(den_, num_, 0);
}

StabilityVerdict RationalTransfer::stability() const {
    StabilityVerdict v;
    auto roots = den_.roots_in_q();
    double worst = 0.0;
    for (const auto& r : roots) {
        v.pole_magnitudes.push_back(std::abs(r));
        worst = std::max(worst, std::abs(r));
    }
    if (worst < 1.0 - kStabilityMargin)
        v.verdict = Stability::stable;
    else if (worst <= 1.0 + kStabilityMargin)
        v.verdict = Stability::marginal;
    else
        v.verdict = Stability::unstable;
    return v;
}

bool RationalTransfer::is_monic() const {
    return delay_ == 0 && std::abs(num_.at(0) - 1.0) <= 1e-12 &&
           std::abs(den_.at(0) - 1.0) <= 1e-12;
}

bool RationalTransfer::is_minimum_phase() const {
    for (const auto& r : num_.roots_in_q())
        if (std::abs(r) >= 1.0 - kStabilityMargin) return false;
    return true;
}

bool RationalTransfer::almost_equal(const RationalTransfer& o, double tol) const {
    if (is_zero() && o.is_zero()) return true;
    return delay_ == o.delay_ && num_.almost_equal(o.num_, tol) && den_.almost_equal(o.den_, tol);
}

std::string RationalTransfer::serialize() const {
    std::vector<double> nc = num_.coeffs();
    if (nc.empty()) nc.push_back(0.0);
    std::vector<double> dc = den_.coeffs();
    return "num=" + format_coeff_list(nc) + " den=" + format_coeff_list(dc) +
           " delay=" + std::to_string(delay_);
}

namespace {
std::string extract_field(const std::string& text, const std::string& key) {
    auto pos = text.find(key + "=");
    if (pos == std::string::npos)
        throw std::invalid_argument("transfer text missing '" + key + "': " + text);
    pos += key.size() + 1;
    if (pos < text.size() && text[pos] == '[') {
        auto end = text.find(']', pos);
        if (end == std::string::npos) throw std::invalid_argument("unterminated list: " + text);
        return text.substr(pos, end - pos + 1);
    }
    auto end = text.find_first_of(" \t", pos);
    return text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}
}  // namespace

RationalTransfer RationalTransfer::parse(const std::string& text) {
    auto num = parse_coeff_list(extract_field(text, "num"));
    auto den = parse_coeff_list(extract_field(text, "den"));
    int delay = 0;
    auto dpos = text.find("delay=");
    if (dpos != std::string::npos) delay = std::stoi(text.substr(dpos + 6));
    // Parsing preserves the stored text exactly; canonicalization already
    // happened before serialization, so skip the cancellation pass.
    return RationalTransfer(Polynomial(num), Polynomial(den), delay, /*cancel_tol=*/0.0);
}

std::vector<std::string> NoiseShape::validate() const {
    std::vector<std::string> problems;
    if (!(variance >= 0.0) || !std::isfinite(variance))
        problems.push_back("noise variance must be finite and nonnegative");
    if (variance == 0.0) return problems;  // absent disturbance, shaper irrelevant
    if (!shaper.is_monic()) problems.push_back("noise shaper is not monic");
    if (shaper.stability().verdict != Stability::stable)
        problems.push_back("noise shaper is not stable");
    if (!shaper.is_minimum_phase()) problems.push_back("noise shaper is not minimum phase");
    return problems;
}

std::vector<double> NoiseShape::spectrum(const std::vector<double>& omega_grid) const {
    std::vector<double> out(omega_grid.size(), 0.0);
    if (variance == 0.0) return out;
    for (size_t i = 0; i < omega_grid.size(); ++i) {
        const double mag = std::abs(shaper.at(omega_grid[i]));
        out[i] = variance * mag * mag;
    }
    return out;
}

}  // namespace netid
