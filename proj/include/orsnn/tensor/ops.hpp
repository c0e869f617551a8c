#pragma once

#include <cstdint>
#include <vector>

#include "orsnn/tensor/tensor.hpp"

namespace orsnn {

// Elementwise arithmetic with right-aligned broadcasting. Gradients flowing
// into a broadcast operand are summed over the broadcast axes.
template <class Real> Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b);
template <class Real> Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b);
template <class Real> Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b);

/// scale * a + shift
template <class Real> Tensor<Real> affine(const Tensor<Real>& a, double scale, double shift = 0.0);
template <class Real> Tensor<Real> scale(const Tensor<Real>& a, double s) { return affine(a, s, 0.0); }

template <class Real> Tensor<Real> relu(const Tensor<Real>& a);

/// Identity in value, no gradient path.
template <class Real> Tensor<Real> stop_gradient(const Tensor<Real>& a);

template <class Real> Tensor<Real> reshape(const Tensor<Real>& a, Shape shape);

/// General axis permutation; out.shape[i] = a.shape[perm[i]].
template <class Real> Tensor<Real> permute(const Tensor<Real>& a, const std::vector<std::size_t>& perm);

/// How conv2d treats an output extent (H + 2p - k) / s + 1 that is not
/// integral: Exact rejects it, Floor drops the trailing rows and columns the
/// last stride cannot reach (the usual framework convention).
enum class ExtentRounding { Exact, Floor };

/// Cross-correlation over input [B, Cin, H, W] with kernel [Cout, Cin, k, k].
/// Output extent (H + 2p - k) / s + 1 must be positive, and integral unless
/// `rounding` is Floor.
template <class Real>
Tensor<Real> conv2d(const Tensor<Real>& input, const Tensor<Real>& kernel, std::size_t stride,
                    std::size_t padding, ExtentRounding rounding = ExtentRounding::Exact);

enum class NormMode { Train, Infer };

template <class Real>
struct BatchNormStats {
    std::vector<Real> running_mean;
    std::vector<Real> running_var;
};

struct BatchNormOptions {
    double eps = 1e-5;
    double momentum = 0.1;
};

/// Normalizes over every axis except axis 1 (the channel axis). Train mode
/// uses batch statistics and folds them into `stats` by exponential moving
/// average (unbiased variance, as in the usual convention); Infer mode uses
/// `stats`.
template <class Real>
Tensor<Real> batch_norm(const Tensor<Real>& input, const Tensor<Real>& gamma, const Tensor<Real>& beta,
                        BatchNormStats<Real>& stats, NormMode mode, BatchNormOptions options = {});

/// Windowed pooling over the two trailing axes of [B, C, H, W]. Max pooling
/// pads with -inf and routes gradient to the first maximum on ties; average
/// pooling divides by the full window size, padding included.
template <class Real>
Tensor<Real> max_pool2d(const Tensor<Real>& input, std::size_t window, std::size_t stride,
                        std::size_t padding);
template <class Real>
Tensor<Real> avg_pool2d(const Tensor<Real>& input, std::size_t window, std::size_t stride,
                        std::size_t padding);
/// [B, C, H, W] -> [B, C, out, out] with the usual floor/ceil bin edges.
template <class Real>
Tensor<Real> adaptive_avg_pool2d(const Tensor<Real>& input, std::size_t out);
/// [B, C, H, W] -> [B, C]
template <class Real> Tensor<Real> global_avg_pool(const Tensor<Real>& input);

/// Affine map over the last axis: x [*, Fin], weight [Fout, Fin], bias [Fout]
/// or an empty tensor for no bias.
template <class Real>
Tensor<Real> dense(const Tensor<Real>& input, const Tensor<Real>& weight, const Tensor<Real>& bias);

enum class ReduceKind { Mean, Max };

/// Reduces the listed axes away (no keepdim). Max routes gradient to the first
/// maximum.
template <class Real>
Tensor<Real> reduce(const Tensor<Real>& input, const std::vector<std::size_t>& axes, ReduceKind kind);
template <class Real> Tensor<Real> sum(const Tensor<Real>& input);

template <class Real>
Tensor<Real> concat(const std::vector<Tensor<Real>>& inputs, std::size_t axis);

/// Mean softmax cross-entropy of logits [N, K] against class indices.
template <class Real>
Tensor<Real> cross_entropy(const Tensor<Real>& logits, const std::vector<std::int32_t>& labels);

}  // namespace orsnn
