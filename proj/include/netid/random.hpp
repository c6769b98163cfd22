#ifndef NETID_RANDOM_HPP
#define NETID_RANDOM_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace netid {

/// Deterministic per-(seed, node, channel) Gaussian stream. Box-Muller on top
/// of mt19937_64 keeps regeneration bit-exact for a given seed.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t node, std::uint64_t channel) {
        std::seed_seq seq{seed, node, channel};
        engine_.seed(seq);
    }

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::vector<double> draw(std::size_t n, double stddev) {
        std::vector<double> out(n);
        for (auto& v : out) v = stddev * next();
        return out;
    }

private:
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace netid

#endif
