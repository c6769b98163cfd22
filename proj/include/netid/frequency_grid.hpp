#ifndef NETID_FREQUENCY_GRID_HPP
#define NETID_FREQUENCY_GRID_HPP

#include <cstddef>
#include <vector>

namespace netid {

/// Strictly increasing radian frequencies in [0, pi).
class FrequencyGrid {
public:
    FrequencyGrid() = default;
    explicit FrequencyGrid(std::vector<double> points);

    /// count points spaced pi/count apart starting at 0 (or at pi/count when
    /// DC must be avoided, e.g. before dividing by a spectrum that vanishes
    /// there).
    static FrequencyGrid uniform(std::size_t count, bool include_dc = true);

    const std::vector<double>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    bool operator==(const FrequencyGrid& o) const { return points_ == o.points_; }

    /// True when the grid is uniform(count, include_dc=true); required by the
    /// cepstral factorization.
    bool is_uniform_from_zero(double tol = 1e-12) const;

private:
    std::vector<double> points_;
};

inline constexpr std::size_t kDefaultGridSize = 512;

}  // namespace netid

#endif
