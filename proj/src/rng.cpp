#include "mpedge/rng.hpp"

#include <cmath>

namespace mpedge {

double RngStream::next_gaussian() {
    if (has_cached_gaussian_) {
        has_cached_gaussian_ = false;
        return cached_gaussian_;
    }
    const double r = std::sqrt(-2.0 * std::log(next_open()));
    const double theta = 2.0 * M_PI * next_double();
    cached_gaussian_ = r * std::sin(theta);
    has_cached_gaussian_ = true;
    return r * std::cos(theta);
}

}  // namespace mpedge
