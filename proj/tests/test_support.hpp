#ifndef NETID_TEST_SUPPORT_HPP
#define NETID_TEST_SUPPORT_HPP

#include <random>
#include <vector>

#include "netid/experiment.hpp"
#include "netid/network.hpp"
#include "netid/network_io.hpp"

namespace netid_test {

inline netid::RationalTransfer random_stable_transfer(std::mt19937& rng, double gain_cap,
                                                      int max_order = 1) {
    std::uniform_real_distribution<double> pole(-0.6, 0.6);
    std::uniform_real_distribution<double> gain(0.3 * gain_cap, gain_cap);
    std::uniform_int_distribution<int> order(0, max_order);
    std::uniform_int_distribution<int> flip(0, 1);
    const double g = (flip(rng) ? 1.0 : -1.0) * gain(rng);
    if (order(rng) == 0) return netid::RationalTransfer(netid::Polynomial{g}, netid::Polynomial{1.0}, 1);
    const double p = pole(rng);
    return netid::RationalTransfer(netid::Polynomial{g * (1.0 - std::abs(p))},
                                   netid::Polynomial{1.0, -p}, 1);
}

/// Random well-posed stable network with unit delays on every edge, white or
/// lightly shaped noise everywhere and a couple of excitations.
inline netid::NetworkModel make_random_network(std::mt19937& rng, int nodes,
                                               double edge_prob = 0.5) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_real_distribution<double> lam(0.05, 0.3);
    for (int attempt = 0; attempt < 50; ++attempt) {
        netid::NetworkModel model(nodes);
        const double cap = 0.9 / nodes;
        for (int j = 1; j <= nodes; ++j)
            for (int k = 1; k <= nodes; ++k) {
                if (j == k || uni(rng) > edge_prob) continue;
                model.set_module(j, k, random_stable_transfer(rng, cap));
            }
        for (int j = 1; j <= nodes; ++j) {
            netid::NoiseShape ns;
            if (uni(rng) < 0.5) {
                ns.shaper = netid::RationalTransfer::constant(1.0);
            } else {
                std::uniform_real_distribution<double> p(-0.5, 0.5);
                ns.shaper = netid::RationalTransfer(netid::Polynomial{1.0, p(rng) * 0.5},
                                                    netid::Polynomial{1.0, p(rng)});
            }
            ns.variance = lam(rng);
            model.set_noise(j, ns);
        }
        model.set_excitation(1, netid::Excitation::white(0.1));
        if (nodes > 2) model.set_excitation(3, netid::Excitation::white(0.1));
        if (model.validate().ok() && !model.modules().empty()) return model;
    }
    throw std::runtime_error("could not draw a valid random network");
}

inline netid::NetworkModel case_study_network(bool two_param_g43 = false) {
    using namespace netid;
    return parse_network_string(case_study_config_text(
        two_param_g43 ? CaseStudyVariant::two_param_g43 : CaseStudyVariant::one_param_g43));
}

/// Indices of the mid-band [0.1 pi, 0.75 pi] on a grid.
inline std::vector<std::size_t> midband(const netid::FrequencyGrid& grid) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] >= 0.1 * 3.14159265358979 && grid[i] <= 0.75 * 3.14159265358979)
            out.push_back(i);
    return out;
}

}  // namespace netid_test

#endif
