#ifndef NETID_IMMERSION_HPP
#define NETID_IMMERSION_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "netid/network.hpp"

namespace netid {

/// Choice of predictor inputs D_j for identifying the module from node k
/// into node j.
struct PredictorSet {
    int target_output = 0;  // j
    int target_input = 0;   // k
    std::set<int> predictors;  // D_j, must contain k and not j

    void check_invariants() const;
};

struct ConsistencyViolation {
    enum class Kind { parallel_path, loop } kind;
    std::vector<int> witness;  // node sequence
    std::string str() const;
};

struct ConsistencyVerdict {
    bool satisfied = false;
    std::vector<ConsistencyViolation> violations;
    /// The direct method additionally needs absence of confounding variables;
    /// no procedure for that check is implemented and this verdict does not
    /// cover it.
    std::string unchecked = "confounding-variable condition not verified";
};

/// Graph conditions for a consistent estimate of G_jk with predictor set D_j:
/// every parallel path k -> j and every loop j -> j must pass through a
/// chosen predictor node.
ConsistencyVerdict check_consistency_conditions(const NetworkModel& model, const PredictorSet& ps);

/// One independent white source feeding the immersed output noise, with its
/// per-frequency transfer into breve-v.
struct NoiseContribution {
    SignalTag source;
    double power = 0.0;
    std::vector<std::complex<double>> transfer;
};

/// Result of eliminating the non-predictor nodes: lumped transfers from each
/// retained predictor into the target node and the spectrum of the lumped
/// output noise.
struct ImmersedNetwork {
    PredictorSet predictor_set;
    FrequencyGrid grid;
    /// Exact lumped transfers, available when at most three nodes were
    /// eliminated (rational elimination stays tractable there).
    std::map<int, RationalTransfer> lumped_exact;
    bool exact_available = false;
    /// Per-frequency lumped transfer values, always present.
    std::map<int, std::vector<std::complex<double>>> lumped_values;
    std::vector<double> immersed_noise_spectrum;  // Phi_breve_v
    std::vector<double> target_noise_spectrum;    // Phi_v_j for reference
    std::vector<NoiseContribution> noise_contributions;
    /// 1/(1-s) where s is the eliminated self-loop term of the target node;
    /// scales the target's own excitation in the immersed equation.
    std::vector<std::complex<double>> self_term_inverse;
};

struct ImmerseOptions {
    /// Proceed despite failed consistency conditions (research use).
    bool allow_inconsistent = false;
    /// Count white excitations at eliminated nodes into the immersed noise
    /// instead of treating them as known (subtractable) signals.
    bool eliminated_excitation_as_noise = false;
};

ImmersedNetwork immerse(const NetworkModel& model, const PredictorSet& ps,
                        const FrequencyGrid& grid, const ImmerseOptions& options = {});

std::vector<double> immersed_noise_spectrum(const NetworkModel& model, const PredictorSet& ps,
                                            const FrequencyGrid& grid,
                                            const ImmerseOptions& options = {});

/// Valid predictor sets for (j,k), ordered by size then lexicographically;
/// always contains the full in-neighbor set and at least one minimal set.
std::vector<PredictorSet> enumerate_valid_predictor_sets(const NetworkModel& model, int j, int k,
                                                         std::size_t max_sets);

/// Grid-sampled monic minimum-phase factor of a positive spectrum plus the
/// implied white-noise variance: variance * |factor|^2 reproduces the input.
/// Cepstrum construction on a uniform grid; diagnostic accuracy (about 1% in
/// mid-band for smooth spectra).
struct SpectralFactor {
    std::vector<std::complex<double>> factor;
    double variance = 0.0;
};

SpectralFactor grid_spectral_factor(const std::vector<double>& spectrum,
                                    const FrequencyGrid& grid);

/// CSV `omega,phi_breve_v,phi_v,<|G_lumped_k|...>` for an immersion result.
std::string immersion_report_csv(const ImmersedNetwork& im);

}  // namespace netid

#endif
