#include "netid/polynomial.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netid {

Polynomial::Polynomial(std::initializer_list<double> coeffs) : coeffs_(coeffs) { trim(); }
Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

Polynomial Polynomial::delay(int k) {
    if (k < 0) throw std::invalid_argument("Polynomial::delay: negative shift");
    std::vector<double> c(static_cast<size_t>(k) + 1, 0.0);
    c.back() = 1.0;
    return Polynomial(std::move(c));
}

void Polynomial::trim() {
    while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

double Polynomial::at(int k) const {
    if (k < 0 || k >= static_cast<int>(coeffs_.size())) return 0.0;
    return coeffs_[static_cast<size_t>(k)];
}

double Polynomial::max_abs_coeff() const {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

std::complex<double> Polynomial::eval(std::complex<double> x) const {
    std::complex<double> acc(0.0, 0.0);
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    std::vector<double> c(std::max(coeffs_.size(), o.coeffs_.size()), 0.0);
    for (size_t i = 0; i < coeffs_.size(); ++i) c[i] += coeffs_[i];
    for (size_t i = 0; i < o.coeffs_.size(); ++i) c[i] += o.coeffs_[i];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    return *this + o.scaled(-1.0);
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    if (is_zero() || o.is_zero()) return Polynomial();
    std::vector<double> c(coeffs_.size() + o.coeffs_.size() - 1, 0.0);
    for (size_t i = 0; i < coeffs_.size(); ++i)
        for (size_t j = 0; j < o.coeffs_.size(); ++j) c[i + j] += coeffs_[i] * o.coeffs_[j];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::scaled(double s) const {
    std::vector<double> c(coeffs_);
    for (double& v : c) v *= s;
    return Polynomial(std::move(c));
}

Polynomial Polynomial::shifted(int k) const {
    if (k < 0) throw std::invalid_argument("Polynomial::shifted: negative shift");
    if (is_zero()) return Polynomial();
    std::vector<double> c(static_cast<size_t>(k), 0.0);
    c.insert(c.end(), coeffs_.begin(), coeffs_.end());
    return Polynomial(std::move(c));
}

std::vector<std::complex<double>> Polynomial::roots_in_q() const {
    // Coefficients of q^n, q^(n-1), ..., q^0 are c[0], c[1], ..., c[n].
    std::vector<double> d(coeffs_);
    size_t lead = 0;
    while (lead < d.size() && d[lead] == 0.0) ++lead;
    d.erase(d.begin(), d.begin() + static_cast<long>(lead));
    if (d.size() <= 1) return {};

    const size_t n = d.size() - 1;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n));
    for (size_t i = 0; i < n; ++i) companion(0, static_cast<long>(i)) = -d[i + 1] / d[0];
    for (size_t i = 1; i < n; ++i) companion(static_cast<long>(i), static_cast<long>(i - 1)) = 1.0;

    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> roots(n);
    for (size_t i = 0; i < n; ++i) roots[i] = es.eigenvalues()(static_cast<long>(i));
    return roots;
}

Polynomial Polynomial::from_roots_in_q(const std::vector<std::complex<double>>& roots,
                                       double leading) {
    std::vector<std::complex<double>> c{std::complex<double>(1.0, 0.0)};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(c.size() + 1, std::complex<double>(0.0, 0.0));
        for (size_t i = 0; i < c.size(); ++i) {
            next[i] += c[i];
            next[i + 1] -= c[i] * r;
        }
        c = std::move(next);
    }
    std::vector<double> real(c.size());
    for (size_t i = 0; i < c.size(); ++i) real[i] = leading * c[i].real();
    // Snap rounding dust from the complex expansion to exact zero.
    double m = 0.0;
    for (double v : real) m = std::max(m, std::abs(v));
    for (double& v : real)
        if (std::abs(v) < 1e-14 * m) v = 0.0;
    return Polynomial(std::move(real));
}

bool Polynomial::almost_equal(const Polynomial& o, double tol) const {
    if (coeffs_.size() != o.coeffs_.size()) return false;
    const double scale = std::max({1.0, max_abs_coeff(), o.max_abs_coeff()});
    for (size_t i = 0; i < coeffs_.size(); ++i)
        if (std::abs(coeffs_[i] - o.coeffs_[i]) > tol * scale) return false;
    return true;
}

}  // namespace netid
