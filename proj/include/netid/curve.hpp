#ifndef NETID_CURVE_HPP
#define NETID_CURVE_HPP

#include <string>
#include <vector>

#include "netid/frequency_grid.hpp"

namespace netid {

/// Nonnegative per-frequency covariance values of a module estimate.
struct CovarianceCurve {
    FrequencyGrid grid;
    std::vector<double> values;
    /// full-MISO | immersed | sample | delta-method
    std::string label;
    int n_params = 0;
    long data_length = 0;
};

/// CSV `omega,value,label,n_params,N`.
std::string curve_to_csv(const CovarianceCurve& curve);

}  // namespace netid

#endif
