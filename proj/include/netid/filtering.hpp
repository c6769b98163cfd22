#ifndef NETID_FILTERING_HPP
#define NETID_FILTERING_HPP

#include <vector>

#include "netid/rational.hpp"

namespace netid {

/// Prior samples for a filter run; past_inputs[i] = u(-1-i), past_outputs[i] = y(-1-i).
struct FilterState {
    std::vector<double> past_inputs;
    std::vector<double> past_outputs;
};

struct FilterOptions {
    /// Reject unstable transfers up front (long-simulation guard).
    bool require_stable = false;
    FilterState initial;
};

/// Runs den(q^-1) y = num(q^-1) u(t - delay) as a direct difference recursion.
/// Output length equals input length; initial conditions zero unless given.
std::vector<double> filter(const RationalTransfer& tf, const std::vector<double>& input,
                           const FilterOptions& options = {});

/// Incremental single-sample form of the same recursion (direct form II
/// transposed, delay folded into the numerator taps). Used by the network
/// simulator where edge inputs become available mid-timestep.
class OnlineFilter {
public:
    explicit OnlineFilter(const RationalTransfer& tf);
    /// Output at the current step given the current input sample.
    /// For transfers with a delay the current input does not contribute.
    double output(double u) const { return b_[0] * u + (state_.empty() ? 0.0 : state_[0]); }
    void advance(double u, double y);
    double step(double u) {
        const double y = output(u);
        advance(u, y);
        return y;
    }

private:
    std::vector<double> b_;  // numerator taps including the delay shift
    std::vector<double> a_;  // denominator taps, a_[0] = 1
    std::vector<double> state_;
};

}  // namespace netid

#endif
