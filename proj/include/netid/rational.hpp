#ifndef NETID_RATIONAL_HPP
#define NETID_RATIONAL_HPP

#include <complex>
#include <string>
#include <vector>

#include "netid/polynomial.hpp"

namespace netid {

/// Stability margin on root magnitudes.
inline constexpr double kStabilityMargin = 1e-8;
/// Relative root distance below which a numerator/denominator root pair is
/// cancelled during canonicalization.
inline constexpr double kCancelTol = 1e-9;

enum class Stability { stable, marginal, unstable };

struct StabilityVerdict {
    Stability verdict;
    std::vector<double> pole_magnitudes;
};

/// Proper rational transfer in the delay operator with an explicit pure input
/// delay:  G = q^-delay * num(q^-1) / den(q^-1), den constant term nonzero.
///
/// Canonical form: den[0] scaled to 1, leading numerator zeros folded into
/// the delay, near-coincident numerator/denominator roots cancelled, and the
/// zero transfer stored as num = 0, den = 1, delay = 0.
class RationalTransfer {
public:
    RationalTransfer();  // zero transfer
    RationalTransfer(Polynomial num, Polynomial den, int delay = 0,
                     double cancel_tol = kCancelTol);

    static RationalTransfer constant(double g);
    static RationalTransfer unit_delay();  // q^-1

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }
    int delay() const { return delay_; }
    bool is_zero() const { return num_.is_zero(); }

    std::complex<double> at(double omega) const;
    std::vector<std::complex<double>> freq_response(const std::vector<double>& omega_grid) const;

    RationalTransfer operator+(const RationalTransfer& o) const;
    RationalTransfer operator-(const RationalTransfer& o) const;
    RationalTransfer operator*(const RationalTransfer& o) const;
    RationalTransfer scaled(double s) const;

    /// 1/G. Exists as a proper transfer only when G has zero delay and a
    /// nonzero numerator constant term.
    RationalTransfer reciprocal() const;

    StabilityVerdict stability() const;
    bool is_stable() const { return stability().verdict == Stability::stable; }
    /// Both polynomials have unit constant term and the delay is zero.
    bool is_monic() const;
    /// All numerator roots strictly inside the unit circle.
    bool is_minimum_phase() const;

    bool almost_equal(const RationalTransfer& o, double tol = 1e-9) const;

    /// Text form `num=[...] den=[...] delay=k`; values round-trip exactly.
    std::string serialize() const;
    static RationalTransfer parse(const std::string& text);

private:
    void canonicalize(double cancel_tol);
    Polynomial num_;
    Polynomial den_;
    int delay_ = 0;
};

/// Noise shaping filter H with white driving-noise variance; H must be monic,
/// stable and minimum phase. variance = 0 encodes an absent disturbance.
struct NoiseShape {
    RationalTransfer shaper = RationalTransfer::constant(1.0);
    double variance = 0.0;

    std::vector<std::string> validate() const;
    /// Pointwise variance * |H|^2 on the grid.
    std::vector<double> spectrum(const std::vector<double>& omega_grid) const;
};

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(const std::string& s);
std::string format_coeff_list(const std::vector<double>& v);
std::vector<double> parse_coeff_list(const std::string& s);

}  // namespace netid

#endif
