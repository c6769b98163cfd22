#ifndef NETID_VARIANCE_HPP
#define NETID_VARIANCE_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "netid/curve.hpp"
#include "netid/immersion.hpp"
#include "netid/network.hpp"

namespace netid {

/// Per-frequency cross-spectral data for a MISO covariance expression, laid
/// out as x = [w_first, e, w_rest...]: phi_w1 is the first predictor's own
/// spectrum, Gamma the cross row from w_first into the remaining channels and
/// Upsilon the Hermitian matrix of those channels (noise variance in its
/// (1,1) entry).
struct SpectralBlock {
    FrequencyGrid grid;
    std::vector<std::string> ordering;  // channel names, first entry w_first
    std::vector<double> phi_w1;
    std::vector<Eigen::RowVectorXcd> gamma;
    std::vector<Eigen::MatrixXcd> upsilon;

    std::size_t channels() const { return ordering.size(); }
    /// Assembled (1 + m) x (1 + m) Hermitian matrix at one grid index.
    Eigen::MatrixXcd full_matrix(std::size_t i) const;
};

/// Schur complement phi_w1 - Gamma Upsilon^-1 Gamma^H, real and positive on
/// well-excited data; throws "no excitation margin" otherwise.
std::vector<double> schur_complement(const SpectralBlock& block);

/// Analytic block for the full-MISO setting: noise channel e_j, remaining
/// predictors after the first. Spectra come from the true model.
SpectralBlock build_spectral_block(const NetworkModel& model, int target_output,
                                   int first_predictor, const std::vector<int>& other_predictors,
                                   const FrequencyGrid& grid);

/// Analytic block for an immersed setting: the noise channel is the immersed
/// innovation (spectral factor of Phi_breve_v).
SpectralBlock build_spectral_block_immersed(const NetworkModel& model, const ImmersedNetwork& im);

struct WelchOptions {
    std::size_t segment_length = 0;  // 0: length/8
    double overlap = 0.5;
    bool hann_window = true;  // else rectangular
};

/// Welch-averaged cross spectrum on an arbitrary grid; window power
/// normalized so white noise of variance v gives a flat level v.
std::vector<std::complex<double>> welch_cross_spectrum(const std::vector<double>& x,
                                                       const std::vector<double>& y,
                                                       const FrequencyGrid& grid,
                                                       const WelchOptions& options = {});

/// Data-driven block from one signal per channel (first channel w_first,
/// second the noise/innovations sequence).
SpectralBlock build_spectral_block_data(const std::vector<std::vector<double>>& channels,
                                        const std::vector<std::string>& names,
                                        const FrequencyGrid& grid,
                                        const WelchOptions& options = {});

/// Averages a list of blocks entrywise (Monte-Carlo averaging).
SpectralBlock average_blocks(const std::vector<SpectralBlock>& blocks);

/// cov(G_hat_j1) = (n/N) Phi_v / (phi_w1 - Gamma Upsilon^-1 Gamma^H).
CovarianceCurve asymptotic_cov_full(const SpectralBlock& block, int n_params, long data_length,
                                    const std::vector<double>& phi_v);

/// Immersed variant: same expression with breve quantities.
CovarianceCurve asymptotic_cov_immersed(const SpectralBlock& block, int n_params, long data_length,
                                        const std::vector<double>& phi_breve_v);

/// Pointwise LHS - RHS of the per-frequency comparison:
///   Phi_breve/Phi_v - [n_full * S_immersed] / [n_immersed * S_full];
/// positive at a frequency means the immersed covariance is larger there.
std::vector<double> theorem1_condition(const SpectralBlock& full, int n_full,
                                       const SpectralBlock& immersed, int n_immersed,
                                       const std::vector<double>& phi_v,
                                       const std::vector<double>& phi_breve_v);

/// Per-frequency sample covariance of complex responses across runs,
/// squared-modulus deviations from the cross-run mean (1/n normalization).
CovarianceCurve sample_covariance(const std::vector<std::vector<std::complex<double>>>& responses,
                                  const FrequencyGrid& grid);

enum class DOptimalityOrder { a_better, b_better, equal };
struct DOptimalityResult {
    DOptimalityOrder order;
    double log_det_inv_a;
    double log_det_inv_b;
};
/// Compares det(P_a^-1) against det(P_b^-1) on same-size parameter blocks.
DOptimalityResult d_optimality_compare(const Eigen::MatrixXd& P_a, const Eigen::MatrixXd& P_b);

enum class EOptimalityOrder { a_dominates, b_dominates, incomparable, equal };
/// Loewner-order test on P_a^-1 - P_b^-1.
EOptimalityOrder e_optimality_compare(const Eigen::MatrixXd& P_a, const Eigen::MatrixXd& P_b);

/// CSV `omega,condition_value,sign`.
std::string condition_to_csv(const FrequencyGrid& grid, const std::vector<double>& condition);

}  // namespace netid

#endif
