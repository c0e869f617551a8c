#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "orsnn/tensor/tensor.hpp"

namespace orsnn {

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine draw.
/// Kept independent of std::uniform_real_distribution so draws are identical
/// across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// He/Kaiming uniform initialization with ReLU gain: U(-b, b), b = sqrt(6 / fan_in).
template <class Real>
Tensor<Real> kaiming_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::vector<Real> values(numel(shape));
    for (auto& v : values) v = static_cast<Real>(uniform(rng, -bound, bound));
    return Tensor<Real>::parameter(std::move(shape), std::move(values));
}

}  // namespace orsnn
