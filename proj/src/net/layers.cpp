#include "orsnn/net/layers.hpp"

#include <cmath>

#include "orsnn/net/arch.hpp"
#include "orsnn/residual/join.hpp"
#include "orsnn/tensor/init.hpp"

namespace orsnn {

namespace {

template <class Real>
void require_rank_at_least(const Tensor<Real>& x, std::size_t rank, const std::string& layer) {
    if (x.rank() < rank) {
        fail(ErrorKind::ShapeMismatch, layer + " expects a [T, N, ...] input of rank >= " + std::to_string(rank) + ", got " +
                                           to_string(x.shape()));
    }
}

// [T, N, C, H, W] <-> [T*N, C, H, W]
template <class Real>
Tensor<Real> fold(const Tensor<Real>& x) {
    Shape s(x.shape().begin() + 1, x.shape().end());
    s[0] *= x.dim(0);
    return reshape(x, std::move(s));
}

template <class Real>
Tensor<Real> unfold(const Tensor<Real>& x, std::size_t steps) {
    Shape s = x.shape();
    s[0] /= steps;
    s.insert(s.begin(), steps);
    return reshape(x, std::move(s));
}

template <class Real>
void check_finite(const Tensor<Real>& out, const std::string& layer) {
    for (Real v : out.values()) {
        if (std::isnan(v)) fail(ErrorKind::NaNDetected, "NaN produced by layer " + layer);
    }
}

}  // namespace

template <class Real>
void record_synaptic(ForwardContext<Real>& ctx, const std::string& name, LayerRole role, const Tensor<Real>& input,
                     double flops_per_step, std::size_t steps, std::size_t batch) {
    if (ctx.record == nullptr) return;
    LayerRecord& rec = ctx.record->entry(name, role);
    std::uint64_t nonzero = 0;
    for (Real v : input.values()) nonzero += v != Real(0);
    rec.input_nonzero += nonzero;
    rec.input_elements += input.size();
    // After an averaging pool the layer is linear in the pre-pool tensor, so
    // binarity is judged there.
    const Tensor<Real>& audited = ctx.pool_source ? *ctx.pool_source : input;
    const BinaryCheck check = check_binary<Real>(audited.values());
    rec.non_binary += check.non_binary;
    rec.max_non_binary = std::max(rec.max_non_binary, check.max_magnitude);
    rec.flops_per_step = flops_per_step;
    rec.samples += batch;
    if (ctx.record->steps == 0) ctx.record->steps = steps;
}

// ---------------------------------------------------------------- Conv2dLayer

template <class Real>
Conv2dLayer<Real>::Conv2dLayer(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                               std::size_t stride, std::size_t padding, bool encoder, std::mt19937_64& rng)
    : Layer<Real>(std::move(name)),
      in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      encoder_(encoder),
      weight_(kaiming_uniform<Real>({out_channels, in_channels, kernel, kernel}, in_channels * kernel * kernel, rng)) {
    if (in_ == 0 || out_ == 0 || kernel_ == 0 || stride_ == 0) {
        fail(ErrorKind::InvalidArgument, this->name() + ": channels, kernel and stride must be >= 1");
    }
}

template <class Real>
Tensor<Real> Conv2dLayer<Real>::forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    require_rank_at_least(x, 5, this->name());
    const std::size_t steps = x.dim(0), batch = x.dim(1);
    if (x.dim(2) != in_) {
        fail(ErrorKind::ShapeMismatch, this->name() + " expects " + std::to_string(in_) + " input channels, got " +
                                           to_string(x.shape()));
    }
    Tensor<Real> out = unfold(conv2d(fold(x), weight_, stride_, padding_, ExtentRounding::Floor), steps);
    bound_ = std::make_pair(out.dim(3), out.dim(4));
    const double flops = static_cast<double>(out.dim(3) * out.dim(4) * kernel_ * kernel_ * in_ * out_);
    ctx.pool_source.reset();
    record_synaptic(ctx, this->name(), encoder_ ? LayerRole::Encoder : LayerRole::Conv, x, flops, steps, batch);
    if (ctx.check_nan) check_finite(out, this->name());
    this->capture(ctx, out);
    return out;
}

template <class Real>
std::string Conv2dLayer<Real>::render() const {
    return ArchToken::conv(out_, kernel_, stride_, padding_).render();
}

// ------------------------------------------------------------- BatchNormLayer

template <class Real>
BatchNormLayer<Real>::BatchNormLayer(std::string name, std::size_t channels)
    : Layer<Real>(std::move(name)),
      gamma_(Tensor<Real>::parameter({channels}, std::vector<Real>(channels, Real(1)))),
      beta_(Tensor<Real>::parameter({channels}, std::vector<Real>(channels, Real(0)))) {
    stats_.running_mean.assign(channels, Real(0));
    stats_.running_var.assign(channels, Real(1));
}

template <class Real>
Tensor<Real> BatchNormLayer<Real>::forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    require_rank_at_least(x, 3, this->name());
    const std::size_t steps = x.dim(0);
    Tensor<Real> out = unfold(batch_norm(fold(x), gamma_, beta_, stats_, ctx.mode), steps);
    if (ctx.check_nan) check_finite(out, this->name());
    this->capture(ctx, out);
    return out;
}

template <class Real>
void BatchNormLayer<Real>::parameters(std::vector<NamedTensor<Real>>& out) {
    out.push_back({this->name() + ".gamma", &gamma_});
    out.push_back({this->name() + ".beta", &beta_});
}

template <class Real>
void BatchNormLayer<Real>::buffers(std::vector<NamedBuffer<Real>>& out) {
    out.push_back({this->name() + ".running_mean", &stats_.running_mean});
    out.push_back({this->name() + ".running_var", &stats_.running_var});
}

// ------------------------------------------------------------------- LifLayer

template <class Real>
LifLayer<Real>::LifLayer(std::string name, LifConfig config) : Layer<Real>(std::move(name)), config_(config) {
    config_.validate();
}

template <class Real>
Tensor<Real> LifLayer<Real>::forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    require_rank_at_least(x, 2, this->name());
    LifRun<Real> run;
    try {
        run = lif_multistep<Real>(x, config_, hidden_);
    } catch (const Error& e) {
        fail(e.kind(), this->name() + ": " + e.what());
    }
    hidden_ = std::move(run.hidden);
    if (ctx.record != nullptr) {
        LayerRecord& rec = ctx.record->entry(this->name(), LayerRole::Spiking);
        std::uint64_t spikes = 0;
        for (Real v : run.spikes.values()) spikes += v != Real(0);
        rec.spikes += spikes;
        rec.spike_slots += run.spikes.size();
        rec.neurons = run.spikes.size() / (x.dim(0) * x.dim(1));
        rec.samples += x.dim(1);
        if (ctx.record->steps == 0) ctx.record->steps = x.dim(0);
    }
    this->capture(ctx, run.spikes);
    return run.spikes;
}

// ---------------------------------------------------------------- pooling

template <class Real>
Tensor<Real> MaxPoolLayer<Real>::forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    require_rank_at_least(x, 5, this->name());
    Tensor<Real> out = unfold(max_pool2d(fold(x), kernel_, stride_, padding_), x.dim(0));
    this->capture(ctx, out);
    return out;
}

template <class Real>
std::string MaxPoolLayer<Real>::render() const {
    return ArchToken::max_pool(kernel_, stride_, padding_).render();
}

template <class Real>
Tensor<Real> AdaptiveAvgPoolLayer<Real>::forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    require_rank_at_least(x, 5, this->name());
    Tensor<Real> out = unfold(adaptive_avg_pool2d(fold(x), size_), x.dim(0));
    ctx.pool_source = x;
    this->capture(ctx, out);
    return out;
}

template <class Real>
Tensor<Real> GlobalAvgPoolLayer<Real>::forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    require_rank_at_least(x, 5, this->name());
    Tensor<Real> out = unfold(global_avg_pool(fold(x)), x.dim(0));
    ctx.pool_source = x;
    this->capture(ctx, out);
    return out;
}

// ----------------------------------------------------------------- DenseLayer

template <class Real>
DenseLayer<Real>::DenseLayer(std::string name, std::size_t in_features, std::size_t out_features, std::mt19937_64& rng)
    : Layer<Real>(std::move(name)), in_(in_features), out_(out_features) {
    if (in_ == 0 || out_ == 0) fail(ErrorKind::InvalidArgument, this->name() + ": features must be >= 1");
    weight_ = kaiming_uniform<Real>({out_, in_}, in_, rng);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    std::vector<Real> b(out_);
    for (auto& v : b) v = static_cast<Real>(uniform(rng, -bound, bound));
    bias_ = Tensor<Real>::parameter({out_}, std::move(b));
}

template <class Real>
Tensor<Real> DenseLayer<Real>::forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    require_rank_at_least(x, 3, this->name());
    const std::size_t steps = x.dim(0), batch = x.dim(1);
    const std::size_t features = x.size() / (steps * batch);
    if (features != in_) {
        fail(ErrorKind::ShapeMismatch, this->name() + " expects " + std::to_string(in_) + " input features, got " +
                                           to_string(x.shape()));
    }
    Tensor<Real> out = dense(reshape(x, {steps, batch, features}), weight_, bias_);
    record_synaptic(ctx, this->name(), LayerRole::Dense, x, static_cast<double>(in_ * out_), steps, batch);
    ctx.pool_source.reset();
    if (ctx.check_nan) check_finite(out, this->name());
    this->capture(ctx, out);
    return out;
}

template <class Real>
void DenseLayer<Real>::parameters(std::vector<NamedTensor<Real>>& out) {
    out.push_back({this->name() + ".weight", &weight_});
    out.push_back({this->name() + ".bias", &bias_});
}

// ------------------------------------------------------------- AttentionLayer

template <class Real>
AttentionLayer<Real>::AttentionLayer(std::string name, AttentionRole role, AttentionDim dim, AttentionParams<Real> params,
                                     const AttentionOptions& options)
    : Layer<Real>(std::move(name)), role_(role), dim_(dim), params_(std::move(params)), options_(options) {}

template <class Real>
Tensor<Real> AttentionLayer<Real>::forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    require_rank_at_least(x, 5, this->name());
    Tensor<Real> w;
    try {
        w = attention_weights(x, params_);
    } catch (const Error& e) {
        fail(e.kind(), this->name() + ": " + e.what());
    }
    last_weights_ = w.detach();
    if (ctx.record != nullptr) {
        std::size_t reduced = 0, ks = 0;
        std::visit(
            [&](const auto& att) {
                using T = std::decay_t<decltype(att)>;
                if constexpr (std::is_same_v<T, SpatialAttention<Real>>) ks = att.kernel_size();
                else reduced = att.w0.dim(0);
            },
            params_);
        const AttentionCost cost = attention_cost(dim_, x.dim(0), x.dim(2), x.dim(3), x.dim(4), reduced, ks);
        LayerRecord& rec = ctx.record->entry(this->name(), LayerRole::Attention);
        rec.attention_mac = cost.mac;
        rec.attention_pooling = cost.pooling;
        rec.samples += x.dim(1);
        std::uint64_t spikes = 0;
        for (Real v : w.values()) spikes += v != Real(0);
        rec.spikes += spikes;
        rec.spike_slots += w.size();
    }
    Tensor<Real> out = apply_attention(x, w, dim_);
    this->capture(ctx, out);
    return out;
}

template <class Real>
void AttentionLayer<Real>::parameters(std::vector<NamedTensor<Real>>& out) {
    std::visit(
        [&](auto& att) {
            using T = std::decay_t<decltype(att)>;
            if constexpr (std::is_same_v<T, SpatialAttention<Real>>) {
                out.push_back({this->name() + ".kernel", &att.kernel});
            } else {
                out.push_back({this->name() + ".w0", &att.w0});
                out.push_back({this->name() + ".w1", &att.w1});
            }
        },
        params_);
}

template <class Real>
Tensor<Real> run_sequence(std::vector<LayerPtr<Real>>& layers, const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    Tensor<Real> h = x;
    for (auto& layer : layers) h = layer->forward(h, ctx);
    return h;
}

#define ORSNN_INSTANTIATE(Real)                                                                                        \
    template class Conv2dLayer<Real>;                                                                                  \
    template class BatchNormLayer<Real>;                                                                               \
    template class LifLayer<Real>;                                                                                     \
    template class MaxPoolLayer<Real>;                                                                                 \
    template class AdaptiveAvgPoolLayer<Real>;                                                                         \
    template class GlobalAvgPoolLayer<Real>;                                                                           \
    template class DenseLayer<Real>;                                                                                   \
    template class AttentionLayer<Real>;                                                                               \
    template Tensor<Real> run_sequence(std::vector<LayerPtr<Real>>&, const Tensor<Real>&, ForwardContext<Real>&);      \
    template void record_synaptic(ForwardContext<Real>&, const std::string&, LayerRole, const Tensor<Real>&, double,   \
                                  std::size_t, std::size_t);

ORSNN_INSTANTIATE(float)
ORSNN_INSTANTIATE(double)

#undef ORSNN_INSTANTIATE

}  // namespace orsnn
