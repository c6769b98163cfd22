#include "netid/filtering.hpp"

#include <algorithm>
#include <stdexcept>

namespace netid {

std::vector<double> filter(const RationalTransfer& tf, const std::vector<double>& input,
                           const FilterOptions& options) {
    if (options.require_stable && tf.stability().verdict == Stability::unstable)
        throw std::runtime_error("unstable filter");

    const auto& b = tf.num().coeffs();
    const auto& a = tf.den().coeffs();
    const int delay = tf.delay();
    const int n = static_cast<int>(input.size());
    std::vector<double> y(static_cast<size_t>(n), 0.0);

    auto u_at = [&](int t) -> double {
        if (t >= 0) return t < n ? input[static_cast<size_t>(t)] : 0.0;
        const size_t back = static_cast<size_t>(-t - 1);
        return back < options.initial.past_inputs.size() ? options.initial.past_inputs[back] : 0.0;
    };
    auto y_at = [&](int t) -> double {
        if (t >= 0) return y[static_cast<size_t>(t)];
        const size_t back = static_cast<size_t>(-t - 1);
        return back < options.initial.past_outputs.size() ? options.initial.past_outputs[back]
                                                          : 0.0;
    };

    for (int t = 0; t < n; ++t) {
        double acc = 0.0;
        for (size_t k = 0; k < b.size(); ++k) acc += b[k] * u_at(t - delay - static_cast<int>(k));
        for (size_t k = 1; k < a.size(); ++k) acc -= a[k] * y_at(t - static_cast<int>(k));
        y[static_cast<size_t>(t)] = acc;  // a[0] == 1 in canonical form
    }
    return y;
}

OnlineFilter::OnlineFilter(const RationalTransfer& tf) {
    const auto& num = tf.num().coeffs();
    b_.assign(static_cast<size_t>(tf.delay()), 0.0);
    b_.insert(b_.end(), num.begin(), num.end());
    if (b_.empty()) b_.push_back(0.0);
    a_ = tf.den().coeffs();
    const size_t order = std::max(b_.size(), a_.size()) - 1;
    state_.assign(order, 0.0);
    b_.resize(order + 1, 0.0);
    a_.resize(order + 1, 0.0);
}

void OnlineFilter::advance(double u, double y) {
    for (size_t i = 0; i + 1 < state_.size(); ++i)
        state_[i] = b_[i + 1] * u - a_[i + 1] * y + state_[i + 1];
    if (!state_.empty()) state_.back() = b_[state_.size()] * u - a_[state_.size()] * y;
}

}  // namespace netid
