#include "netid/frequency_grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace netid {

FrequencyGrid::FrequencyGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("FrequencyGrid: empty");
    double prev = -1.0;
    for (double w : points_) {
        if (!(w >= 0.0) || w >= std::numbers::pi || !(w > prev))
            throw std::invalid_argument(
                "FrequencyGrid: points must be strictly increasing in [0, pi)");
        prev = w;
    }
}

FrequencyGrid FrequencyGrid::uniform(std::size_t count, bool include_dc) {
    if (count == 0) throw std::invalid_argument("FrequencyGrid: zero count");
    std::vector<double> pts(count);
    const double step = std::numbers::pi / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i)
        pts[i] = step * (static_cast<double>(i) + (include_dc ? 0.0 : 1.0));
    if (!include_dc && pts.back() >= std::numbers::pi) pts.pop_back();
    return FrequencyGrid(std::move(pts));
}

bool FrequencyGrid::is_uniform_from_zero(double tol) const {
    if (points_.empty() || points_[0] != 0.0) return false;
    const double step = std::numbers::pi / static_cast<double>(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i)
        if (std::abs(points_[i] - step * static_cast<double>(i)) > tol) return false;
    return true;
}

}  // namespace netid
