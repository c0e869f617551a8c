#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace orsnn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Right-aligned (numpy-style) broadcast of two shapes. Throws ShapeMismatch
/// naming both shapes when an axis pair is neither equal nor 1.
Shape broadcast_shapes(const Shape& a, const Shape& b);

/// Row-major strides of `shape`, padded on the left to `rank` axes, with zero
/// stride on axes where `shape` is broadcast against `target`.
std::vector<std::size_t> broadcast_strides(const Shape& shape, const Shape& target);

}  // namespace orsnn
