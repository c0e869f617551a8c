#pragma once

#include <string>
#include <string_view>

#include "orsnn/tensor/ops.hpp"

namespace orsnn {

/// Element-wise residual join g(x, y).
enum class JoinMode { Add, And, IAnd, Or };

std::string_view to_string(JoinMode mode);
JoinMode parse_join_mode(std::string_view text);

/// True for the three modes that map binary operands to binary outputs.
constexpr bool is_bitwise(JoinMode mode) { return mode != JoinMode::Add; }

/// Differentiable join, written in arithmetic form so gradients follow it:
///   ADD  x + y
///   AND  x · y
///   IAND (1 - x) · y
///   OR   (x + y) - x · y
template <class Real>
Tensor<Real> join(const Tensor<Real>& x, const Tensor<Real>& y, JoinMode mode);

struct BinaryCheck {
    std::size_t non_binary = 0;  // elements outside {0, 1}
    double max_magnitude = 0.0;  // largest |v| among them
    bool ok() const { return non_binary == 0; }
};

template <class Real>
BinaryCheck check_binary(std::span<const Real> values);

/// join() with operand validation for bitwise modes. With strict set, a
/// non-binary operand raises NotBinary naming `layer` and the offending count.
template <class Real>
Tensor<Real> join_checked(const Tensor<Real>& x, const Tensor<Real>& y, JoinMode mode, const std::string& layer,
                          bool strict);

}  // namespace orsnn
