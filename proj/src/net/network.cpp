#include "orsnn/net/network.hpp"

#include <map>

namespace orsnn {

namespace {

std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t s, std::size_t p, const std::string& where) {
    if (in + 2 * p < k) {
        fail(ErrorKind::ShapeMismatch, where + ": kernel " + std::to_string(k) + " exceeds padded extent " +
                                           std::to_string(in + 2 * p));
    }
    return (in + 2 * p - k) / s + 1;
}

}  // namespace

template <class Real>
Network<Real>::Network(const std::vector<ArchToken>& tokens, const NetworkOptions& options)
    : options_(options), arch_(render_arch(tokens)) {
    options_.lif.validate();
    // A non-OR join on the default topology means a plain SEW network.
    if (options_.topology == BlockTopology::OrSew && options_.join != JoinMode::Or) options_.topology = BlockTopology::Sew;
    if (options_.steps == 0) fail(ErrorKind::InvalidArgument, "time steps must be >= 1");
    if (options_.plan && options_.join != JoinMode::Or) {
        fail(ErrorKind::InvalidArgument, "SynA attention requires the OR join, got " + std::string(to_string(options_.join)));
    }
    if (options_.plan && options_.topology != BlockTopology::OrSew) {
        fail(ErrorKind::InvalidArgument, "SynA attention requires OR-SEW blocks");
    }
    std::mt19937_64 rng(options_.seed);
    std::map<std::string, std::size_t> counters;
    auto next = [&](const std::string& stem) { return stem + std::to_string(++counters[stem]); };

    std::size_t c = options_.in_channels, h = options_.height, w = options_.width;
    bool flat = false;  // after AP or FC the activation is [T, N, F]
    bool seen_conv = false;
    for (const ArchToken& t : expand_repeats(tokens)) {
        const bool spatial = t.kind == ArchToken::Kind::Conv || t.kind == ArchToken::Kind::MaxPool ||
                             t.kind == ArchToken::Kind::AdaptiveAP || t.kind == ArchToken::Kind::AP ||
                             t.kind == ArchToken::Kind::Block || t.kind == ArchToken::Kind::MA ||
                             t.kind == ArchToken::Kind::IA;
        if (flat && spatial) fail(ErrorKind::InvalidArgument, "'" + t.render() + "' cannot follow a flattening layer");
        switch (t.kind) {
            case ArchToken::Kind::Conv: {
                const std::string name = next("conv");
                h = conv_extent(h, t.kernel, t.stride, t.padding, name);
                w = conv_extent(w, t.kernel, t.stride, t.padding, name);
                layers_.push_back(std::make_unique<Conv2dLayer<Real>>(name, c, t.channels, t.kernel, t.stride, t.padding,
                                                                      !seen_conv, rng));
                seen_conv = true;
                c = t.channels;
                break;
            }
            case ArchToken::Kind::BN:
                layers_.push_back(std::make_unique<BatchNormLayer<Real>>(next("bn"), c));
                break;
            case ArchToken::Kind::LIF:
                layers_.push_back(std::make_unique<LifLayer<Real>>(next("lif"), options_.lif));
                break;
            case ArchToken::Kind::MaxPool: {
                const std::string name = next("mp");
                h = conv_extent(h, t.kernel, t.stride, t.padding, name);
                w = conv_extent(w, t.kernel, t.stride, t.padding, name);
                layers_.push_back(std::make_unique<MaxPoolLayer<Real>>(name, t.kernel, t.stride, t.padding));
                break;
            }
            case ArchToken::Kind::AdaptiveAP:
                layers_.push_back(std::make_unique<AdaptiveAvgPoolLayer<Real>>(next("aap"), t.size));
                h = w = t.size;
                break;
            case ArchToken::Kind::AP:
                layers_.push_back(std::make_unique<GlobalAvgPoolLayer<Real>>(next("ap")));
                h = w = 1;
                flat = true;
                break;
            case ArchToken::Kind::FC: {
                layers_.push_back(std::make_unique<DenseLayer<Real>>(next("fc"), c * h * w, t.channels, rng));
                c = t.channels;
                h = w = 1;
                flat = true;
                classes_ = t.channels;
                break;
            }
            case ArchToken::Kind::Block: {
                BlockSpec spec;
                spec.topology = options_.topology;
                spec.in_channels = c;
                spec.channels = t.channels;
                spec.stride = t.stride;
                spec.join = options_.join;
                spec.plan = options_.plan;
                spec.attention = options_.attention;
                spec.lif = options_.lif;
                spec.steps = options_.steps;
                const std::string name = next("block");
                h = conv_extent(h, 3, t.stride, 1, name);
                w = conv_extent(w, 3, t.stride, 1, name);
                layers_.push_back(std::make_unique<ResidualBlock<Real>>(name, spec, rng));
                c = t.channels;
                break;
            }
            case ArchToken::Kind::MA:
            case ArchToken::Kind::IA: {
                if (!options_.plan) {
                    fail(ErrorKind::InvalidArgument, "'" + t.render() + "' in the architecture needs an attention plan");
                }
                const bool ma = t.kind == ArchToken::Kind::MA;
                const AttentionDim dim = options_.plan->dim;
                auto params = make_attention<Real>(dim, options_.steps, c, options_.attention, options_.lif, rng);
                layers_.push_back(std::make_unique<AttentionLayer<Real>>(
                    next(ma ? "ma" : "ia"), ma ? AttentionRole::Promoting : AttentionRole::Inhibitory, dim,
                    std::move(params), options_.attention));
                break;
            }
            case ArchToken::Kind::Repeat: break;  // expanded above
        }
    }
    if (layers_.empty()) fail(ErrorKind::InvalidArgument, "empty architecture");
    if (layers_.back()->kind() != LayerKind::Dense) {
        fail(ErrorKind::InvalidArgument, "architecture must end with an FC classifier");
    }
}

template <class Real>
Tensor<Real> Network<Real>::forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    if (x.rank() != 5 || x.dim(2) != options_.in_channels) {
        fail(ErrorKind::ShapeMismatch, "network expects [T, N, " + std::to_string(options_.in_channels) +
                                           ", H, W] input, got " + to_string(x.shape()));
    }
    ctx.pool_source.reset();
    const Tensor<Real> head = run_sequence(layers_, x, ctx);
    if (ctx.record != nullptr) {
        ctx.record->samples += x.dim(1);
        ctx.record->steps = x.dim(0);
    }
    return reduce(head, {0}, ReduceKind::Mean);
}

template <class Real>
Tensor<Real> Network<Real>::forward(const Tensor<Real>& x, NormMode mode) {
    ForwardContext<Real> ctx;
    ctx.mode = mode;
    return forward(x, ctx);
}

template <class Real>
void Network<Real>::reset_states() {
    for (auto& l : layers_) l->reset_state();
}

template <class Real>
std::vector<NamedTensor<Real>> Network<Real>::parameters() {
    std::vector<NamedTensor<Real>> out;
    for (auto& l : layers_) l->parameters(out);
    return out;
}

template <class Real>
std::vector<NamedBuffer<Real>> Network<Real>::buffers() {
    std::vector<NamedBuffer<Real>> out;
    for (auto& l : layers_) l->buffers(out);
    return out;
}

template <class Real>
std::size_t Network<Real>::parameter_count() {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.tensor->size();
    return n;
}

template <class Real>
void Network<Real>::visit(const std::function<void(Layer<Real>&)>& f) {
    for (auto& l : layers_) l->visit(f);
}

template <class Real>
std::vector<ResidualBlock<Real>*> Network<Real>::blocks() {
    std::vector<ResidualBlock<Real>*> out;
    for (auto& l : layers_) {
        if (l->kind() == LayerKind::Block) out.push_back(static_cast<ResidualBlock<Real>*>(l.get()));
    }
    return out;
}

template <class Real>
ResidualBlock<Real>& Network<Real>::block(const std::string& name) {
    for (auto* b : blocks()) {
        if (b->name() == name || b->shortcut_name() == name) return *b;
    }
    fail(ErrorKind::UnknownLayer, "no residual block named '" + name + "'");
}

template <class Real>
std::vector<std::string> Network<Real>::shortcut_names() {
    std::vector<std::string> out;
    for (auto* b : blocks()) out.push_back(b->shortcut_name());
    return out;
}

template <class Real>
bool Network<Real>::is_linear() {
    for (auto* b : blocks()) {
        if (!b->pruned()) return false;
    }
    return true;
}

template <class Real>
std::string Network<Real>::render() const {
    std::string out;
    for (const auto& l : layers_) {
        if (!out.empty()) out += '-';
        out += l->render();
    }
    return out;
}

template <class Real>
Tensor<Real> encode_static(const Tensor<Real>& images, std::size_t steps) {
    if (steps == 0) fail(ErrorKind::InvalidArgument, "encode_static needs T >= 1");
    if (images.rank() != 4) fail(ErrorKind::ShapeMismatch, "encode_static expects [N, C, H, W], got " + to_string(images.shape()));
    Shape s = images.shape();
    s.insert(s.begin(), steps);
    std::vector<Real> v;
    v.reserve(images.size() * steps);
    for (std::size_t t = 0; t < steps; ++t) v.insert(v.end(), images.values().begin(), images.values().end());
    return Tensor<Real>(std::move(s), std::move(v));
}

template class Network<float>;
template class Network<double>;
template Tensor<float> encode_static(const Tensor<float>&, std::size_t);
template Tensor<double> encode_static(const Tensor<double>&, std::size_t);

}  // namespace orsnn
