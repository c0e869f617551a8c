#include "orsnn/attention/syna.hpp"

#include "orsnn/tensor/init.hpp"

namespace orsnn {

char to_char(AttentionDim dim) {
    switch (dim) {
        case AttentionDim::Temporal: return 'T';
        case AttentionDim::Channel: return 'C';
        case AttentionDim::Spatial: return 'S';
    }
    return '?';
}

char to_char(Placement placement) {
    return static_cast<char>('a' + static_cast<int>(placement));
}

std::string AttentionPlan::render() const {
    return std::string{to_char(dim), '/', to_char(placement)};
}

std::optional<AttentionPlan> parse_attention_plan(const std::string& text) {
    if (text.empty() || text == "none") return std::nullopt;
    if (text.size() != 3 || text[1] != '/') {
        fail(ErrorKind::ParseError, "attention plan '" + text + "' is not of the form T/a");
    }
    AttentionPlan plan;
    switch (text[0]) {
        case 'T': plan.dim = AttentionDim::Temporal; break;
        case 'C': plan.dim = AttentionDim::Channel; break;
        case 'S': plan.dim = AttentionDim::Spatial; break;
        default: fail(ErrorKind::ParseError, "attention dimension must be T, C or S in '" + text + "'");
    }
    if (text[2] < 'a' || text[2] > 'd') fail(ErrorKind::ParseError, "attention placement must be a-d in '" + text + "'");
    plan.placement = static_cast<Placement>(text[2] - 'a');
    return plan;
}

std::string render_attention_plan(const std::optional<AttentionPlan>& plan) {
    return plan ? plan->render() : "none";
}

namespace {

std::size_t reduced_extent(std::size_t extent, std::size_t reduction, const char* what) {
    if (reduction == 0) fail(ErrorKind::InvalidArgument, std::string(what) + " reduction factor must be >= 1");
    const std::size_t r = std::min(reduction, extent);
    if (extent % r != 0) {
        fail(ErrorKind::InvalidArgument, std::string(what) + " extent " + std::to_string(extent) +
                                             " is not divisible by reduction " + std::to_string(r));
    }
    return extent / r;
}

}  // namespace

template <class Real>
TemporalAttention<Real> TemporalAttention<Real>::create(std::size_t steps, std::size_t reduction, const LifConfig& neuron,
                                                        std::mt19937_64& rng) {
    const std::size_t reduced = reduced_extent(steps, reduction, "temporal");
    TemporalAttention att;
    att.w0 = kaiming_uniform<Real>({reduced, steps}, steps, rng);
    att.w1 = kaiming_uniform<Real>({steps, reduced}, reduced, rng);
    att.neuron = neuron;
    return att;
}

template <class Real>
ChannelAttention<Real> ChannelAttention<Real>::create(std::size_t channels, std::size_t reduction, const LifConfig& neuron,
                                                      std::mt19937_64& rng) {
    const std::size_t reduced = reduced_extent(channels, reduction, "channel");
    ChannelAttention att;
    att.w0 = kaiming_uniform<Real>({reduced, channels}, channels, rng);
    att.w1 = kaiming_uniform<Real>({channels, reduced}, reduced, rng);
    att.neuron = neuron;
    return att;
}

template <class Real>
SpatialAttention<Real> SpatialAttention<Real>::create(std::size_t kernel_size, const LifConfig& neuron,
                                                      std::mt19937_64& rng) {
    if (kernel_size % 2 == 0) {
        fail(ErrorKind::InvalidArgument, "spatial attention kernel must be odd, got " + std::to_string(kernel_size));
    }
    SpatialAttention att;
    att.kernel = kaiming_uniform<Real>({1, 2, kernel_size, kernel_size}, 2 * kernel_size * kernel_size, rng);
    att.neuron = neuron;
    return att;
}

template <class Real>
AttentionParams<Real> make_attention(AttentionDim dim, std::size_t steps, std::size_t channels,
                                     const AttentionOptions& options, const LifConfig& neuron, std::mt19937_64& rng) {
    switch (dim) {
        case AttentionDim::Temporal:
            return TemporalAttention<Real>::create(steps, options.temporal_reduction, neuron, rng);
        case AttentionDim::Channel:
            return ChannelAttention<Real>::create(channels, options.channel_reduction, neuron, rng);
        case AttentionDim::Spatial:
            return SpatialAttention<Real>::create(options.spatial_kernel, neuron, rng);
    }
    fail(ErrorKind::InvalidArgument, "bad attention dimension");
}

namespace {

template <class Real>
void require_5d(const Tensor<Real>& x, const char* what) {
    if (x.rank() != 5) fail(ErrorKind::ShapeMismatch, std::string(what) + " expects [T,N,C,H,W], got " + to_string(x.shape()));
}

template <class Real>
Tensor<Real> bottleneck(const Tensor<Real>& descriptor, const Tensor<Real>& w0, const Tensor<Real>& w1) {
    return dense(relu(dense(descriptor, w0, Tensor<Real>())), w1, Tensor<Real>());
}

template <class Real>
Tensor<Real> fire(const Tensor<Real>& drive, const LifConfig& neuron) {
    return lif_multistep(drive, neuron).spikes;
}

}  // namespace

template <class Real>
Tensor<Real> ma_t_weights(const Tensor<Real>& x, const TemporalAttention<Real>& att) {
    require_5d(x, "temporal attention");
    const std::size_t steps = x.dim(0), batch = x.dim(1);
    if (steps != att.steps()) {
        fail(ErrorKind::ShapeMismatch, "temporal attention built for T=" + std::to_string(att.steps()) + ", input has T=" +
                                           std::to_string(steps));
    }
    const Tensor<Real> flat = reshape(x, {steps, batch, x.size() / (steps * batch)});
    // [T, N] -> [N, T] so the shared MLP runs along time.
    const Tensor<Real> avg = permute(reduce(flat, {2}, ReduceKind::Mean), {1, 0});
    const Tensor<Real> mx = permute(reduce(flat, {2}, ReduceKind::Max), {1, 0});
    const Tensor<Real> drive = add(bottleneck(avg, att.w0, att.w1), bottleneck(mx, att.w0, att.w1));
    return fire(permute(drive, {1, 0}), att.neuron);
}

template <class Real>
Tensor<Real> ma_c_weights(const Tensor<Real>& x, const ChannelAttention<Real>& att) {
    require_5d(x, "channel attention");
    const std::size_t steps = x.dim(0), batch = x.dim(1), channels = x.dim(2);
    if (channels != att.channels()) {
        fail(ErrorKind::ShapeMismatch, "channel attention built for C=" + std::to_string(att.channels()) + ", input has C=" +
                                           std::to_string(channels));
    }
    const Tensor<Real> flat = reshape(x, {steps, batch, channels, x.dim(3) * x.dim(4)});
    const Tensor<Real> avg = reduce(flat, {3}, ReduceKind::Mean);
    const Tensor<Real> mx = reduce(flat, {3}, ReduceKind::Max);
    const Tensor<Real> drive = add(bottleneck(avg, att.w0, att.w1), bottleneck(mx, att.w0, att.w1));
    return fire(drive, att.neuron);
}

template <class Real>
Tensor<Real> ia_s_weights(const Tensor<Real>& x, const SpatialAttention<Real>& att) {
    require_5d(x, "spatial attention");
    const std::size_t steps = x.dim(0), batch = x.dim(1), h = x.dim(3), w = x.dim(4);
    const std::size_t ks = att.kernel_size();
    if (ks % 2 == 0) fail(ErrorKind::InvalidArgument, "spatial attention kernel must be odd, got " + std::to_string(ks));
    const Tensor<Real> planes = reshape(x, {steps * batch, x.dim(2), h, w});
    const Tensor<Real> mx = reshape(reduce(planes, {1}, ReduceKind::Max), {steps * batch, 1, h, w});
    const Tensor<Real> avg = reshape(reduce(planes, {1}, ReduceKind::Mean), {steps * batch, 1, h, w});
    const Tensor<Real> drive = conv2d(concat<Real>({mx, avg}, 1), att.kernel, 1, (ks - 1) / 2);
    return fire(reshape(drive, {steps, batch, 1, h, w}), att.neuron);
}

template <class Real>
Tensor<Real> attention_weights(const Tensor<Real>& x, const AttentionParams<Real>& params) {
    return std::visit(
        [&](const auto& att) -> Tensor<Real> {
            using T = std::decay_t<decltype(att)>;
            if constexpr (std::is_same_v<T, TemporalAttention<Real>>) return ma_t_weights(x, att);
            else if constexpr (std::is_same_v<T, ChannelAttention<Real>>) return ma_c_weights(x, att);
            else return ia_s_weights(x, att);
        },
        params);
}

template <class Real>
Tensor<Real> apply_attention(const Tensor<Real>& x, const Tensor<Real>& weights, AttentionDim dim) {
    require_5d(x, "apply_attention");
    const Shape& s = x.shape();
    Shape expect;
    switch (dim) {
        case AttentionDim::Temporal: expect = {s[0], s[1]}; break;
        case AttentionDim::Channel: expect = {s[0], s[1], s[2]}; break;
        case AttentionDim::Spatial: expect = {s[0], s[1], 1, s[3], s[4]}; break;
    }
    if (weights.shape() != expect) {
        fail(ErrorKind::ShapeMismatch, "attention weights " + to_string(weights.shape()) + " cannot broadcast onto " +
                                           to_string(s));
    }
    Shape aligned = expect;
    while (aligned.size() < 5) aligned.push_back(1);
    return mul(x, reshape(weights, aligned));
}

AttentionCost attention_cost(AttentionDim dim, std::size_t steps, std::size_t channels, std::size_t height,
                             std::size_t width, std::size_t reduced, std::size_t kernel_size) {
    AttentionCost cost;
    const double t = static_cast<double>(steps);
    const double volume = static_cast<double>(channels * height * width);
    cost.pooling = 2.0 * t * volume;
    switch (dim) {
        case AttentionDim::Temporal:
            cost.mac = 2.0 * 2.0 * t * static_cast<double>(reduced);
            break;
        case AttentionDim::Channel:
            cost.mac = t * 2.0 * 2.0 * static_cast<double>(channels * reduced);
            break;
        case AttentionDim::Spatial:
            cost.mac = t * static_cast<double>(height * width * kernel_size * kernel_size * 2);
            break;
    }
    return cost;
}

#define ORSNN_INSTANTIATE(Real)                                                                                     \
    template struct TemporalAttention<Real>;                                                                       \
    template struct ChannelAttention<Real>;                                                                        \
    template struct SpatialAttention<Real>;                                                                        \
    template AttentionParams<Real> make_attention(AttentionDim, std::size_t, std::size_t, const AttentionOptions&, \
                                                  const LifConfig&, std::mt19937_64&);                             \
    template Tensor<Real> ma_t_weights(const Tensor<Real>&, const TemporalAttention<Real>&);                       \
    template Tensor<Real> ma_c_weights(const Tensor<Real>&, const ChannelAttention<Real>&);                        \
    template Tensor<Real> ia_s_weights(const Tensor<Real>&, const SpatialAttention<Real>&);                        \
    template Tensor<Real> attention_weights(const Tensor<Real>&, const AttentionParams<Real>&);                    \
    template Tensor<Real> apply_attention(const Tensor<Real>&, const Tensor<Real>&, AttentionDim);

ORSNN_INSTANTIATE(float)
ORSNN_INSTANTIATE(double)

#undef ORSNN_INSTANTIATE

}  // namespace orsnn
