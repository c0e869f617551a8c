#pragma once

#include <optional>
#include <random>
#include <string>
#include <variant>

#include "orsnn/neuron/lif.hpp"

namespace orsnn {

/// Axis the attention weights act on.
enum class AttentionDim { Temporal, Channel, Spatial };
/// MA promotes features on the backbone; IA inhibits noise on shortcuts.
enum class AttentionRole { Promoting, Inhibitory };
/// Insertion rows a-d of the downsampling OR-SEW block layout.
enum class Placement { A, B, C, D };

char to_char(AttentionDim dim);
char to_char(Placement placement);

/// Dimension and placement, written "T/a", "C/b", "S/d".
struct AttentionPlan {
    AttentionDim dim = AttentionDim::Temporal;
    Placement placement = Placement::A;

    std::string render() const;
    bool operator==(const AttentionPlan&) const = default;
};

/// Parses "T/a" style plans; "none" or "" yields no plan.
std::optional<AttentionPlan> parse_attention_plan(const std::string& text);
std::string render_attention_plan(const std::optional<AttentionPlan>& plan);

/// Reduction factors and kernel size. `channel_reduction` is the bottleneck
/// factor of the channel MLP; `spatial_kernel` is the side of the 2->1
/// spatial convolution. Reductions are clamped so the reduced extent is >= 1.
struct AttentionOptions {
    std::size_t temporal_reduction = 4;
    std::size_t channel_reduction = 16;
    std::size_t spatial_kernel = 7;

    bool operator==(const AttentionOptions&) const = default;
};

/// Shared two-layer bottleneck over the time axis: w0 [T/r, T], w1 [T, T/r].
template <class Real>
struct TemporalAttention {
    Tensor<Real> w0;
    Tensor<Real> w1;
    LifConfig neuron;

    std::size_t steps() const { return w0.dim(1); }
    static TemporalAttention create(std::size_t steps, std::size_t reduction, const LifConfig& neuron,
                                    std::mt19937_64& rng);
};

/// Shared two-layer bottleneck over channels: w0 [C/k, C], w1 [C, C/k].
template <class Real>
struct ChannelAttention {
    Tensor<Real> w0;
    Tensor<Real> w1;
    LifConfig neuron;

    std::size_t channels() const { return w0.dim(1); }
    static ChannelAttention create(std::size_t channels, std::size_t reduction, const LifConfig& neuron,
                                   std::mt19937_64& rng);
};

/// Bias-free 2 -> 1 convolution over the [max; mean] channel-pooled maps.
template <class Real>
struct SpatialAttention {
    Tensor<Real> kernel;  // [1, 2, ks, ks]
    LifConfig neuron;

    std::size_t kernel_size() const { return kernel.dim(2); }
    static SpatialAttention create(std::size_t kernel_size, const LifConfig& neuron, std::mt19937_64& rng);
};

template <class Real>
using AttentionParams = std::variant<TemporalAttention<Real>, ChannelAttention<Real>, SpatialAttention<Real>>;

template <class Real>
AttentionParams<Real> make_attention(AttentionDim dim, std::size_t steps, std::size_t channels,
                                     const AttentionOptions& options, const LifConfig& neuron, std::mt19937_64& rng);

/// x [T, N, C, H, W] -> binary [T, N]. Mean and max over (C, H, W) per step
/// and sample, both through the shared MLP over T, summed, then a spiking
/// neuron run over T with fresh state.
template <class Real>
Tensor<Real> ma_t_weights(const Tensor<Real>& x, const TemporalAttention<Real>& att);

/// x [T, N, C, H, W] -> binary [T, N, C]. Pools over (H, W).
template <class Real>
Tensor<Real> ma_c_weights(const Tensor<Real>& x, const ChannelAttention<Real>& att);

/// x [T, N, C, H, W] -> binary [T, N, 1, H, W]. Channel max and channel mean
/// are stacked (max first) into two channels and convolved to one.
template <class Real>
Tensor<Real> ia_s_weights(const Tensor<Real>& x, const SpatialAttention<Real>& att);

/// Dispatches on the parameter set; identical math for MA and IA roles.
template <class Real>
Tensor<Real> attention_weights(const Tensor<Real>& x, const AttentionParams<Real>& params);

template <class Real>
Tensor<Real> ia_weights(const Tensor<Real>& x, const AttentionParams<Real>& params) {
    return attention_weights(x, params);
}

/// X_out = W · X_in with W replicated along the axes it lacks.
template <class Real>
Tensor<Real> apply_attention(const Tensor<Real>& x, const Tensor<Real>& weights, AttentionDim dim);

/// Multiply-accumulate count of the attention MLP/convolution and the number
/// of pooling reductions, per sample over the whole window.
struct AttentionCost {
    double mac = 0.0;
    double pooling = 0.0;
};

AttentionCost attention_cost(AttentionDim dim, std::size_t steps, std::size_t channels, std::size_t height,
                             std::size_t width, std::size_t reduced, std::size_t kernel_size);

}  // namespace orsnn
