#ifndef NETID_POLYNOMIAL_HPP
#define NETID_POLYNOMIAL_HPP

#include <complex>
#include <initializer_list>
#include <vector>

namespace netid {

/// Polynomial in the unit-delay operator: p = c[0] + c[1] q^-1 + c[2] q^-2 + ...
/// Trailing zero coefficients are trimmed so equality is well defined; the
/// zero polynomial has an empty coefficient list and degree -1.
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> coeffs);
    explicit Polynomial(std::vector<double> coeffs);

    static Polynomial one() { return Polynomial({1.0}); }
    static Polynomial delay(int k);  // q^-k

    const std::vector<double>& coeffs() const { return coeffs_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }
    double at(int k) const;  // coefficient of q^-k, 0 outside range
    double max_abs_coeff() const;

    std::complex<double> eval(std::complex<double> x) const;  // p(x), x = e^{-i omega}

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial scaled(double s) const;
    Polynomial shifted(int k) const;  // multiply by q^-k

    /// Roots in the forward-shift variable: solutions q of
    /// c[0] q^n + c[1] q^(n-1) + ... + c[n] = 0 with n = degree().
    /// Leading zeros (c[0] = 0, ...) reduce the count; used for pole/zero
    /// magnitude checks.
    std::vector<std::complex<double>> roots_in_q() const;

    /// Rebuild from forward-shift roots and a leading coefficient, pairing
    /// conjugates so the result is real.
    static Polynomial from_roots_in_q(const std::vector<std::complex<double>>& roots,
                                      double leading);

    bool almost_equal(const Polynomial& o, double tol) const;

private:
    void trim();
    std::vector<double> coeffs_;
};

}  // namespace netid

#endif
