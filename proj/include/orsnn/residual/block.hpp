#pragma once

#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "orsnn/net/layers.hpp"
#include "orsnn/residual/join.hpp"

namespace orsnn {

/// Residual block wiring.
///   VanillaSpiking  SN(W2 SN(W1 X) + shortcut(X))       join is ADD
///   MS              W2 SN(W1 SN(X)) + shortcut(X)       join is ADD
///   Sew             g(SN(W2 SN(W1 X)), shortcut(X))     any join
///   OrSew           Sew with g = OR, plus SynA insertion points
/// Every topology is followed by a plain post-join stage of two
/// conv-BN-LIF layers.
enum class BlockTopology { VanillaSpiking, MS, Sew, OrSew };

std::string_view to_string(BlockTopology topology);
BlockTopology parse_block_topology(std::string_view text);

struct BlockSpec {
    BlockTopology topology = BlockTopology::OrSew;
    std::size_t in_channels = 0;
    std::size_t channels = 0;
    std::size_t stride = 2;
    JoinMode join = JoinMode::Or;
    std::optional<AttentionPlan> plan;
    AttentionOptions attention;
    LifConfig lif;
    std::size_t steps = 1;  // T; sizes temporal attention
};

/// The three rows of a block in architecture notation, e.g. for OR-SEW(c128)
/// placement c:
///   main     c128k3s2p1-BN-MA-LIF-c128k3s1p1-BN-LIF
///   shortcut c128k1s2-BN-IA-LIF
///   post     c128k3s1p1-BN-LIF-c128k3s1p1-BN-LIF
struct BlockLayout {
    std::string main;
    std::string shortcut;  // "identity" when there is no projection
    std::string post;
    std::string render() const;
    bool operator==(const BlockLayout&) const = default;
};

template <class Real>
class ResidualBlock final : public Layer<Real> {
public:
    ResidualBlock(std::string name, const BlockSpec& spec, std::mt19937_64& rng);

    LayerKind kind() const override { return LayerKind::Block; }
    Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx) override;
    std::string render() const override;
    void parameters(std::vector<NamedTensor<Real>>& out) override;
    void buffers(std::vector<NamedBuffer<Real>>& out) override;
    void reset_state() override;
    void visit(const std::function<void(Layer<Real>&)>& f) override;

    const BlockSpec& spec() const { return spec_; }
    BlockLayout layout() const;
    /// Name under which the shortcut operand is recorded.
    std::string shortcut_name() const { return this->name() + ".shortcut"; }
    bool has_projection() const { return !shortcut_.empty(); }

    /// Replaces g(x, shortcut) by x. Only meaningful when the shortcut is
    /// silent and g absorbs zero (OR).
    void prune() { pruned_ = true; }
    bool pruned() const { return pruned_; }

    /// Nonzero elements of the shortcut operand in the last forward.
    std::size_t last_shortcut_nonzero() const { return last_shortcut_nonzero_; }

    std::vector<LayerPtr<Real>>& main() { return main_; }
    std::vector<LayerPtr<Real>>& shortcut() { return shortcut_; }
    std::vector<LayerPtr<Real>>& post() { return post_; }

private:
    BlockSpec spec_;
    std::vector<LayerPtr<Real>> main_;
    std::vector<LayerPtr<Real>> shortcut_;
    LayerPtr<Real> join_lif_;  // VanillaSpiking only
    std::vector<LayerPtr<Real>> post_;
    bool pruned_ = false;
    std::size_t last_shortcut_nonzero_ = 0;
};

}  // namespace orsnn
