#ifndef NETID_NETWORK_HPP
#define NETID_NETWORK_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netid/frequency_grid.hpp"
#include "netid/rational.hpp"

namespace netid {

/// External excitation at a node: absent, seeded white noise of given power,
/// or a user-supplied sample sequence.
struct Excitation {
    enum class Kind { none, white, external };
    Kind kind = Kind::none;
    double power = 0.0;              // white-noise variance
    std::vector<double> samples;     // external sequence, used as recorded

    static Excitation none() { return {}; }
    static Excitation white(double power) { return {Kind::white, power, {}}; }
    static Excitation external(std::vector<double> s) { return {Kind::external, 0.0, std::move(s)}; }
};

/// A signal name inside the network: node signal w_k, white source e_k, or
/// excitation r_k. Node ids are 1-based throughout.
struct SignalTag {
    enum class Kind { node, noise, excitation };
    Kind kind = Kind::node;
    int node = 0;

    static SignalTag w(int node) { return {Kind::node, node}; }
    static SignalTag e(int node) { return {Kind::noise, node}; }
    static SignalTag r(int node) { return {Kind::excitation, node}; }
    bool operator==(const SignalTag&) const = default;
    std::string str() const;
};

struct ValidationReport {
    std::vector<std::string> problems;
    bool ok() const { return problems.empty(); }
    std::string str() const;
};

/// Interconnection of L node signals: w = G w + r + v with zero-diagonal
/// module matrix G, per-node noise v_j = H_j e_j and excitations r_j.
class NetworkModel {
public:
    explicit NetworkModel(int node_count);

    int node_count() const { return node_count_; }

    void set_module(int to, int from, RationalTransfer tf);
    void remove_module(int to, int from);
    bool has_module(int to, int from) const;
    const RationalTransfer& module(int to, int from) const;
    const std::map<std::pair<int, int>, RationalTransfer>& modules() const { return modules_; }

    void set_noise(int node, NoiseShape ns);
    const NoiseShape& noise(int node) const { return noise_[index(node)]; }

    void set_excitation(int node, Excitation e);
    const Excitation& excitation(int node) const { return excitation_[index(node)]; }

    /// In-neighbors of node j (the indices k with G_jk nonzero), ascending.
    std::vector<int> in_neighbors(int j) const;

    /// L x L complex module matrix at a single frequency.
    Eigen::MatrixXcd transfer_matrix(double omega) const;

    ValidationReport validate(const FrequencyGrid& grid = FrequencyGrid::uniform(kDefaultGridSize)) const;

    /// Nodes ordered so that every delay-free edge goes from an earlier to a
    /// later node; empty if the delay-free subgraph has a cycle.
    std::optional<std::vector<int>> delay_free_topological_order() const;

private:
    int index(int node) const;
    int node_count_;
    std::map<std::pair<int, int>, RationalTransfer> modules_;  // key: (to, from)
    std::vector<NoiseShape> noise_;
    std::vector<Excitation> excitation_;
};

/// One simulated experiment: node signals, known excitations and (for test
/// oracles) the driving white noises, all of length N.
struct SignalRecord {
    int sample_count = 0;
    double sample_time = 1.0;
    std::vector<std::vector<double>> w;  // [node-1][t]
    std::vector<std::vector<double>> r;
    std::vector<std::vector<double>> e;
    std::uint64_t seed = 0;
};

struct SimulateOptions {
    int burn_in = 1000;  // discarded start-up samples
};

SignalRecord simulate(const NetworkModel& model, int sample_count, double sample_time,
                      std::uint64_t seed, const SimulateOptions& options = {});

/// Per-frequency closed-loop response of every node to every source channel.
/// noise_to_w column k is the response of w to e_k (shaping included);
/// exc_to_w column k is the response to r_k.
struct ClosedLoopResponse {
    FrequencyGrid grid;
    std::vector<Eigen::MatrixXcd> noise_to_w;
    std::vector<Eigen::MatrixXcd> exc_to_w;
};

ClosedLoopResponse closed_loop_response(const NetworkModel& model, const FrequencyGrid& grid);

/// Exact cross spectrum Phi_ab on the grid from the known true system,
/// summing |transfer|^2-weighted contributions of the independent white
/// sources. White excitations enter as flat spectra of their stated power;
/// external excitation sequences have no analytic spectrum and are rejected.
std::vector<std::complex<double>> analytic_cross_spectrum(const NetworkModel& model,
                                                          const FrequencyGrid& grid, SignalTag a,
                                                          SignalTag b);

/// All independent white sources of a model with their powers and
/// per-frequency transfers into each node signal. Shared by the analytic
/// spectra here and the spectral-block assembly in the variance layer.
struct SourceDecomposition {
    std::vector<SignalTag> sources;           // e_k / r_k (white only)
    std::vector<double> powers;               // lambda_k or r-power
    std::vector<Eigen::MatrixXcd> node_gain;  // per frequency: L x n_sources
    FrequencyGrid grid;

    /// Transfer row of an arbitrary tag over the source list at frequency i.
    Eigen::RowVectorXcd tag_gain(const NetworkModel& model, SignalTag tag, std::size_t i) const;
};

SourceDecomposition source_decomposition(const NetworkModel& model, const FrequencyGrid& grid);

}  // namespace netid

#endif
