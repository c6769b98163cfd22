#ifndef NETID_EXPERIMENT_HPP
#define NETID_EXPERIMENT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netid/identify.hpp"
#include "netid/network.hpp"
#include "netid/variance.hpp"

namespace netid {

/// Monte-Carlo experiment description: the network plus an [experiment]
/// stanza (keys N, Ts, runs, seed, grid, burnin, restarts, workers, target,
/// predictors, sweep, orders, noise_orders).
struct ExperimentConfig {
    std::string network_text;

    int sample_count = 10000;
    double sample_time = 1.0;
    int runs = 100;
    std::uint64_t seed = 20240;
    int grid_size = 512;
    int burn_in = 1000;

    int target_output = 0;  // j
    int target_input = 0;   // k
    std::vector<int> full_predictors;      // defaults to the in-neighbor set
    std::vector<int> immersed_predictors;  // empty: no immersed setup

    struct Sweep {
        int from = 0;
        int to = 0;
        std::vector<double> gains;  // scale factors on the edge numerator
    };
    std::optional<Sweep> sweep;

    /// Per-setup ("full"/"immersed"), per-input-node order overrides; orders
    /// default to those of the true (lumped) transfers.
    std::map<std::pair<std::string, int>, BJStructure::Input> order_overrides;
    std::map<std::string, std::pair<int, int>> noise_order_overrides;  // (nc, nd)

    int restarts = 5;
    int workers = 0;  // 0: hardware concurrency

    NetworkModel network() const;
    std::string canonical() const;
    std::uint64_t hash() const;
    void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);
/// Extracts the embedded config from a manifest written by run_montecarlo.
ExperimentConfig config_from_manifest(const std::string& manifest_text);

struct SetupDiagnostics {
    std::string name;
    int n_params = 0;
    int included_runs = 0;
    int excluded_runs = 0;
    int converged_runs = 0;
    double mean_iterations = 0.0;
    double mean_sigma2 = 0.0;
    double whiteness_pass_fraction = 0.0;  // |rho_eps(tau)| < 3/sqrt(N), tau=1..20
    Eigen::MatrixXd mean_target_block;     // marginal covariance of the target module params
    double logdet_inv_full_P = 0.0;        // full-matrix value, dimension n_params
    std::vector<Eigen::VectorXd> run_thetas;
    std::vector<Eigen::VectorXd> run_cov_diagonals;
};

struct SweepPointResult {
    double gain = 1.0;
    CovarianceCurve sample_full;
    CovarianceCurve sample_immersed;
    bool sample_available = false;
    CovarianceCurve asymptotic_full;
    CovarianceCurve asymptotic_immersed;
    CovarianceCurve delta_full;
    CovarianceCurve delta_immersed;
    std::vector<double> condition;  // theorem-1 condition on the grid
    SetupDiagnostics diag_full;
    SetupDiagnostics diag_immersed;
    DOptimalityResult d_verdict{};
    EOptimalityOrder e_verdict{};
    std::vector<std::uint64_t> run_seeds;
    std::vector<std::uint64_t> record_hashes;
    std::vector<int> excluded_runs;
};

struct ResultBundle {
    ExperimentConfig config;
    FrequencyGrid grid;
    std::vector<SweepPointResult> points;
    std::string manifest() const;
};

ResultBundle run_montecarlo(const ExperimentConfig& config);

enum class CaseStudyVariant { one_param_g43, two_param_g43 };

/// Built-in four-node benchmark network; the returned text is a complete
/// experiment config (dump it with the CLI to vary the coefficients).
std::string case_study_config_text(CaseStudyVariant variant);

struct CaseStudyOverrides {
    std::optional<int> runs;
    std::optional<int> sample_count;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid_size;
    std::optional<int> workers;
};

ResultBundle reproduce_case_study(CaseStudyVariant variant, const CaseStudyOverrides& o = {});

/// Writes one CSV per figure-equivalent plus the manifest and a plotting
/// stub. `which` is any of sample|asymptotic|delta|condition|all.
void export_plotdata(const ResultBundle& bundle, const std::string& which,
                     const std::string& out_dir);

/// FNV-1a of a byte string; used for config and record hashes.
std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t record_hash(const SignalRecord& rec);

}  // namespace netid

#endif
