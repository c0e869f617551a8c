#include "orsnn/residual/block.hpp"

#include "orsnn/net/arch.hpp"

namespace orsnn {

std::string_view to_string(BlockTopology topology) {
    switch (topology) {
        case BlockTopology::VanillaSpiking: return "Vanilla";
        case BlockTopology::MS: return "MS";
        case BlockTopology::Sew: return "SEW";
        case BlockTopology::OrSew: return "OR-SEW";
    }
    return "?";
}

BlockTopology parse_block_topology(std::string_view text) {
    if (text == "Vanilla" || text == "VanillaSpiking") return BlockTopology::VanillaSpiking;
    if (text == "MS") return BlockTopology::MS;
    if (text == "SEW") return BlockTopology::Sew;
    if (text == "OR-SEW") return BlockTopology::OrSew;
    fail(ErrorKind::ParseError, "unknown block topology '" + std::string(text) + "' (expected Vanilla, MS, SEW or OR-SEW)");
}

std::string BlockLayout::render() const {
    return "main: " + main + "\nshortcut: " + shortcut + "\npost: " + post + "\n";
}

namespace {

template <class Real>
std::string render_row(const std::vector<LayerPtr<Real>>& layers) {
    std::string out;
    for (const auto& l : layers) {
        if (!out.empty()) out += '-';
        out += l->render();
    }
    return out;
}

template <class Real>
class RowBuilder {
public:
    RowBuilder(std::string prefix, const BlockSpec& spec, std::mt19937_64& rng, std::vector<LayerPtr<Real>>& out)
        : prefix_(std::move(prefix)), spec_(spec), rng_(rng), out_(out) {}

    void conv(std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t p, const std::string& id) {
        out_.push_back(std::make_unique<Conv2dLayer<Real>>(prefix_ + "conv" + id, in, out, k, s, p, false, rng_));
    }
    void bn(const std::string& id) {
        out_.push_back(std::make_unique<BatchNormLayer<Real>>(prefix_ + "bn" + id, spec_.channels));
    }
    void lif(const std::string& id) { out_.push_back(std::make_unique<LifLayer<Real>>(prefix_ + "lif" + id, spec_.lif)); }
    void attention(AttentionRole role, const std::string& id) {
        const AttentionDim dim = spec_.plan->dim;
        auto params = make_attention<Real>(dim, spec_.steps, spec_.channels, spec_.attention, spec_.lif, rng_);
        const std::string tag = role == AttentionRole::Promoting ? "ma" : "ia";
        out_.push_back(std::make_unique<AttentionLayer<Real>>(prefix_ + tag + id, role, dim, std::move(params),
                                                              spec_.attention));
    }

private:
    std::string prefix_;
    const BlockSpec& spec_;
    std::mt19937_64& rng_;
    std::vector<LayerPtr<Real>>& out_;
};

template <class Real>
std::size_t count_nonzero(const Tensor<Real>& t) {
    std::size_t n = 0;
    for (Real v : t.values()) n += v != Real(0);
    return n;
}

}  // namespace

template <class Real>
ResidualBlock<Real>::ResidualBlock(std::string name, const BlockSpec& spec, std::mt19937_64& rng)
    : Layer<Real>(std::move(name)), spec_(spec) {
    const std::string& n = this->name();
    if (spec.channels == 0 || spec.in_channels == 0 || spec.stride == 0) {
        fail(ErrorKind::InvalidArgument, n + ": channels and stride must be >= 1");
    }
    if (spec.plan && spec.topology != BlockTopology::OrSew) {
        fail(ErrorKind::InvalidArgument, n + ": SynA attention requires the OR-SEW topology, got " +
                                             std::string(to_string(spec.topology)));
    }
    if (spec.topology == BlockTopology::OrSew && spec.join != JoinMode::Or) {
        fail(ErrorKind::InvalidArgument, n + ": OR-SEW blocks join with OR, got " + std::string(to_string(spec.join)));
    }
    if ((spec.topology == BlockTopology::VanillaSpiking || spec.topology == BlockTopology::MS) &&
        spec.join != JoinMode::Add) {
        fail(ErrorKind::InvalidArgument, n + ": " + std::string(to_string(spec.topology)) +
                                             " blocks add real-valued operands; join must be ADD");
    }
    spec_.lif.validate();

    const std::size_t c = spec.channels;
    const bool ma_first = spec.plan && (spec.plan->placement == Placement::A || spec.plan->placement == Placement::C);
    const bool ma_second = spec.plan && (spec.plan->placement == Placement::B || spec.plan->placement == Placement::D);
    const bool post_first = spec.plan && spec.plan->placement == Placement::A;
    const bool post_second = spec.plan && spec.plan->placement == Placement::B;

    RowBuilder<Real> main(n + ".main.", spec_, rng, main_);
    if (spec.topology == BlockTopology::MS) main.lif("0");
    main.conv(spec.in_channels, c, 3, spec.stride, 1, "1");
    main.bn("1");
    if (ma_first) main.attention(AttentionRole::Promoting, "1");
    main.lif("1");
    main.conv(c, c, 3, 1, 1, "2");
    main.bn("2");
    if (ma_second) main.attention(AttentionRole::Promoting, "2");
    if (spec.topology == BlockTopology::Sew || spec.topology == BlockTopology::OrSew) main.lif("2");

    if (spec.stride != 1 || spec.in_channels != c) {
        RowBuilder<Real> sc(n + ".shortcut.", spec_, rng, shortcut_);
        sc.conv(spec.in_channels, c, 1, spec.stride, 0, "");
        sc.bn("");
        if (spec.plan) sc.attention(AttentionRole::Inhibitory, "");
        if (spec.topology == BlockTopology::Sew || spec.topology == BlockTopology::OrSew) sc.lif("");
    }

    if (spec.topology == BlockTopology::VanillaSpiking) {
        join_lif_ = std::make_unique<LifLayer<Real>>(n + ".join.lif", spec_.lif);
    }

    RowBuilder<Real> post(n + ".post.", spec_, rng, post_);
    post.conv(c, c, 3, 1, 1, "1");
    post.bn("1");
    if (post_first) post.attention(AttentionRole::Promoting, "1");
    post.lif("1");
    post.conv(c, c, 3, 1, 1, "2");
    post.bn("2");
    if (post_second) post.attention(AttentionRole::Promoting, "2");
    post.lif("2");
}

template <class Real>
Tensor<Real> ResidualBlock<Real>::forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) {
    Tensor<Real> h = run_sequence(main_, x, ctx);
    if (!pruned_) {
        Tensor<Real> s = shortcut_.empty() ? x : run_sequence(shortcut_, x, ctx);
        last_shortcut_nonzero_ = count_nonzero(s);
        if (ctx.record != nullptr) {
            LayerRecord& rec = ctx.record->entry(shortcut_name(), LayerRole::Shortcut);
            rec.spikes += last_shortcut_nonzero_;
            rec.spike_slots += s.size();
            rec.neurons = s.size() / (s.dim(0) * s.dim(1));
            rec.samples += s.dim(1);
        }
        h = join_checked(h, s, spec_.join, this->name() + ".join", ctx.strict);
        if (ctx.capture != nullptr) ctx.capture->emplace_back(this->name() + ".join", h);
    } else {
        last_shortcut_nonzero_ = 0;
    }
    if (join_lif_) h = join_lif_->forward(h, ctx);
    return run_sequence(post_, h, ctx);
}

template <class Real>
std::string ResidualBlock<Real>::render() const {
    std::string label(to_string(spec_.topology));
    if (spec_.topology == BlockTopology::Sew) label += "-" + std::string(to_string(spec_.join));
    const std::string geometry = "c" + std::to_string(spec_.channels) + (spec_.stride != 2 ? "s" + std::to_string(spec_.stride) : "");
    return "(" + label + " Block(" + geometry + "))";
}

template <class Real>
BlockLayout ResidualBlock<Real>::layout() const {
    BlockLayout l;
    l.main = render_row(main_);
    l.shortcut = shortcut_.empty() ? "identity" : render_row(shortcut_);
    std::string post = render_row(post_);
    l.post = join_lif_ ? "LIF-" + post : post;
    return l;
}

template <class Real>
void ResidualBlock<Real>::parameters(std::vector<NamedTensor<Real>>& out) {
    visit([&](Layer<Real>& l) {
        if (&l != this) l.parameters(out);
    });
}

template <class Real>
void ResidualBlock<Real>::buffers(std::vector<NamedBuffer<Real>>& out) {
    visit([&](Layer<Real>& l) {
        if (&l != this) l.buffers(out);
    });
}

template <class Real>
void ResidualBlock<Real>::reset_state() {
    visit([&](Layer<Real>& l) {
        if (&l != this) l.reset_state();
    });
}

template <class Real>
void ResidualBlock<Real>::visit(const std::function<void(Layer<Real>&)>& f) {
    f(*this);
    for (auto& l : main_) l->visit(f);
    if (!pruned_) {
        for (auto& l : shortcut_) l->visit(f);
    }
    if (join_lif_) join_lif_->visit(f);
    for (auto& l : post_) l->visit(f);
}

template class ResidualBlock<float>;
template class ResidualBlock<double>;

}  // namespace orsnn
