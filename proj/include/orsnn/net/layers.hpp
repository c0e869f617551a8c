#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "orsnn/attention/syna.hpp"
#include "orsnn/metrics/record.hpp"
#include "orsnn/neuron/lif.hpp"

namespace orsnn {

enum class LayerKind { Conv, BatchNorm, Lif, MaxPool, AdaptiveAvgPool, GlobalAvgPool, Dense, Attention, Block };

/// Per-pass settings and sinks threaded through every layer.
template <class Real>
struct ForwardContext {
    NormMode mode = NormMode::Infer;
    SpikeRecord* record = nullptr;
    // Raise NotBinary when a bitwise join sees a non-binary operand.
    bool strict = true;
    bool check_nan = true;
    // When set, every leaf layer appends (name, output) here.
    std::vector<std::pair<std::string, Tensor<Real>>>* capture = nullptr;
    // Input of the most recent averaging pool. Averaging commutes with the
    // following linear layer, so that layer's spike-drivenness is judged on
    // the tensor before pooling.
    std::optional<Tensor<Real>> pool_source;
};

template <class Real>
struct NamedTensor {
    std::string name;
    Tensor<Real>* tensor;
};

template <class Real>
struct NamedBuffer {
    std::string name;
    std::vector<Real>* values;
};

/// A node of the network. Activations are [T, N, ...] with time leading.
template <class Real>
class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;
    Layer(const Layer&) = delete;
    Layer& operator=(const Layer&) = delete;

    const std::string& name() const { return name_; }
    virtual LayerKind kind() const = 0;
    virtual Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) = 0;
    /// Architecture-string token for this layer.
    virtual std::string render() const = 0;
    virtual void parameters(std::vector<NamedTensor<Real>>&) {}
    virtual void buffers(std::vector<NamedBuffer<Real>>&) {}
    virtual void reset_state() {}
    /// Visits this layer and, for composites, every nested layer in order.
    virtual void visit(const std::function<void(Layer&)>& f) { f(*this); }

protected:
    void capture(ForwardContext<Real>& ctx, const Tensor<Real>& out) const {
        if (ctx.capture != nullptr) ctx.capture->emplace_back(name_, out);
    }

private:
    std::string name_;
};

template <class Real>
using LayerPtr = std::unique_ptr<Layer<Real>>;

template <class Real>
class Conv2dLayer final : public Layer<Real> {
public:
    Conv2dLayer(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                std::size_t stride, std::size_t padding, bool encoder, std::mt19937_64& rng);

    LayerKind kind() const override { return LayerKind::Conv; }
    Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) override;
    std::string render() const override;
    void parameters(std::vector<NamedTensor<Real>>& out) override { out.push_back({this->name() + ".weight", &weight_}); }

    bool encoder() const { return encoder_; }
    std::size_t in_channels() const { return in_; }
    std::size_t out_channels() const { return out_; }
    std::size_t kernel() const { return kernel_; }
    std::size_t stride() const { return stride_; }
    std::size_t padding() const { return padding_; }
    /// Output extent of the last forward, if any.
    std::optional<std::pair<std::size_t, std::size_t>> bound_output() const { return bound_; }
    Tensor<Real>& weight() { return weight_; }

private:
    std::size_t in_, out_, kernel_, stride_, padding_;
    bool encoder_;
    Tensor<Real> weight_;
    std::optional<std::pair<std::size_t, std::size_t>> bound_;
};

template <class Real>
class BatchNormLayer final : public Layer<Real> {
public:
    BatchNormLayer(std::string name, std::size_t channels);

    LayerKind kind() const override { return LayerKind::BatchNorm; }
    Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) override;
    std::string render() const override { return "BN"; }
    void parameters(std::vector<NamedTensor<Real>>& out) override;
    void buffers(std::vector<NamedBuffer<Real>>& out) override;

    Tensor<Real>& gamma() { return gamma_; }
    Tensor<Real>& beta() { return beta_; }
    BatchNormStats<Real>& stats() { return stats_; }

private:
    Tensor<Real> gamma_;
    Tensor<Real> beta_;
    BatchNormStats<Real> stats_;
};

template <class Real>
class LifLayer final : public Layer<Real> {
public:
    LifLayer(std::string name, LifConfig config);

    LayerKind kind() const override { return LayerKind::Lif; }
    Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) override;
    std::string render() const override { return "LIF"; }
    void reset_state() override { hidden_.clear(); }

    const LifConfig& config() const { return config_; }
    /// Membrane state carried into the next forward; empty after reset.
    const std::vector<Real>& hidden() const { return hidden_; }

private:
    LifConfig config_;
    std::vector<Real> hidden_;
};

template <class Real>
class MaxPoolLayer final : public Layer<Real> {
public:
    MaxPoolLayer(std::string name, std::size_t kernel, std::size_t stride, std::size_t padding)
        : Layer<Real>(std::move(name)), kernel_(kernel), stride_(stride), padding_(padding) {}

    LayerKind kind() const override { return LayerKind::MaxPool; }
    Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) override;
    std::string render() const override;

private:
    std::size_t kernel_, stride_, padding_;
};

template <class Real>
class AdaptiveAvgPoolLayer final : public Layer<Real> {
public:
    AdaptiveAvgPoolLayer(std::string name, std::size_t size) : Layer<Real>(std::move(name)), size_(size) {}

    LayerKind kind() const override { return LayerKind::AdaptiveAvgPool; }
    Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) override;
    std::string render() const override { return "AdaptiveAP(" + std::to_string(size_) + ")"; }

private:
    std::size_t size_;
};

/// [T, N, C, H, W] -> [T, N, C]
template <class Real>
class GlobalAvgPoolLayer final : public Layer<Real> {
public:
    explicit GlobalAvgPoolLayer(std::string name) : Layer<Real>(std::move(name)) {}

    LayerKind kind() const override { return LayerKind::GlobalAvgPool; }
    Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) override;
    std::string render() const override { return "AP"; }
};

/// Flattens everything after [T, N] and applies an affine map.
template <class Real>
class DenseLayer final : public Layer<Real> {
public:
    DenseLayer(std::string name, std::size_t in_features, std::size_t out_features, std::mt19937_64& rng);

    LayerKind kind() const override { return LayerKind::Dense; }
    Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) override;
    std::string render() const override { return "FC" + std::to_string(out_); }
    void parameters(std::vector<NamedTensor<Real>>& out) override;

    std::size_t in_features() const { return in_; }
    std::size_t out_features() const { return out_; }
    Tensor<Real>& weight() { return weight_; }
    Tensor<Real>& bias() { return bias_; }

private:
    std::size_t in_, out_;
    Tensor<Real> weight_;
    Tensor<Real> bias_;
};

/// SynA module: computes binary weights from its input and gates it.
template <class Real>
class AttentionLayer final : public Layer<Real> {
public:
    AttentionLayer(std::string name, AttentionRole role, AttentionDim dim, AttentionParams<Real> params,
                   const AttentionOptions& options);

    LayerKind kind() const override { return LayerKind::Attention; }
    Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) override;
    std::string render() const override { return role_ == AttentionRole::Promoting ? "MA" : "IA"; }
    void parameters(std::vector<NamedTensor<Real>>& out) override;

    AttentionRole role() const { return role_; }
    AttentionDim dim() const { return dim_; }
    const AttentionParams<Real>& params() const { return params_; }
    /// Weights produced by the most recent forward.
    const Tensor<Real>& last_weights() const { return last_weights_; }

private:
    AttentionRole role_;
    AttentionDim dim_;
    AttentionParams<Real> params_;
    AttentionOptions options_;
    Tensor<Real> last_weights_;
};

/// Runs `layers` in order.
template <class Real>
Tensor<Real> run_sequence(std::vector<LayerPtr<Real>>& layers, const Tensor<Real>& x, ForwardContext<Real>& ctx);

/// Records input statistics for a synaptic layer (conv or dense).
template <class Real>
void record_synaptic(ForwardContext<Real>& ctx, const std::string& name, LayerRole role, const Tensor<Real>& input,
                     double flops_per_step, std::size_t steps, std::size_t batch);

}  // namespace orsnn
