#ifndef NETID_IDENTIFY_HPP
#define NETID_IDENTIFY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netid/curve.hpp"
#include "netid/rational.hpp"

namespace netid {

/// Box-Jenkins MISO structure: y = sum_k (B_k/F_k) u_k + (C/D) e with
/// per-input numerator/denominator orders and delays plus noise orders.
struct BJStructure {
    struct Input {
        int nb = 1;
        int nf = 0;
        int delay = 1;
    };
    std::vector<Input> inputs;
    int nc = 0;
    int nd = 0;

    int param_count() const;
    void check() const;
    /// Offset of input k's B block (its F block follows immediately).
    int input_offset(int k) const;
    int noise_offset() const;  // C block; D block follows
};

/// Parameter vector decoded into filter polynomials. B_k carries its delay.
struct BJModel {
    BJStructure structure;
    std::vector<std::vector<double>> b;  // per input, nb taps
    std::vector<std::vector<double>> f;  // per input, [1, f_1..f_nf]
    std::vector<double> c;               // [1, c_1..c_nc]
    std::vector<double> d;               // [1, d_1..d_nd]

    static BJModel decode(const BJStructure& s, const Eigen::VectorXd& theta);
    Eigen::VectorXd encode() const;
    /// Input transfer B_k/F_k as a rational transfer (delay explicit).
    RationalTransfer input_transfer(int k) const;
    RationalTransfer noise_transfer() const;  // C/D
    bool predictor_stable() const;            // F_k, C, D roots inside the unit circle
};

struct IdentifyData {
    std::vector<double> y;
    std::vector<std::vector<double>> inputs;
    void check(const BJStructure& s) const;
};

struct Prediction {
    std::vector<double> yhat;
    std::vector<double> residual;
};

/// One-step-ahead prediction: eps = (D/C) (y - sum_k (B_k/F_k) u_k).
Prediction predict(const BJStructure& s, const Eigen::VectorXd& theta, const IdentifyData& data);

/// Analytic gradient psi(t, theta) = d eps / d theta, N x n.
Eigen::MatrixXd gradient(const BJStructure& s, const Eigen::VectorXd& theta,
                         const IdentifyData& data);

struct FitOptions {
    int max_iterations = 200;
    int restarts = 5;  // total starts; the first is unperturbed
    double cost_tolerance = 1e-9;
    double gradient_tolerance = 1e-8;
    std::uint64_t seed = 0;
    std::optional<Eigen::VectorXd> initial_theta;
    FrequencyGrid response_grid = FrequencyGrid::uniform(kDefaultGridSize);
};

struct FitResult {
    BJStructure structure;
    Eigen::VectorXd theta;
    double sigma2 = 0.0;
    Eigen::MatrixXd covariance;  // P_theta, per-estimate scaling (1/N inside)
    int iterations = 0;
    bool converged = false;
    std::vector<double> cost_trace;  // accepted costs, nonincreasing
    long data_length = 0;
    FrequencyGrid grid;
    std::vector<std::vector<std::complex<double>>> module_response;  // per input on grid

    BJModel model() const { return BJModel::decode(structure, theta); }
};

/// Prediction-error fit: damped Gauss-Newton with stability projection,
/// stage-wise ARX initialization and seeded multi-start.
FitResult fit_pem(const BJStructure& s, const IdentifyData& data, const FitOptions& options = {});

/// P = sigma2 * [(1/N) sum psi psi^T]^-1 / N at the fitted parameters.
Eigen::MatrixXd param_covariance(const FitResult& fit, const IdentifyData& data);

/// Delta-method propagation of the module's parameter block of P to its
/// frequency response variance.
CovarianceCurve module_response_covariance(const FitResult& fit, int module_index,
                                           const FrequencyGrid& grid);

std::string fit_report(const FitResult& fit);
std::string fit_responses_csv(const FitResult& fit);

}  // namespace netid

#endif
