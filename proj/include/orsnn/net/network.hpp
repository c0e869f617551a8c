#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orsnn/net/arch.hpp"
#include "orsnn/residual/block.hpp"

namespace orsnn {

struct NetworkOptions {
    JoinMode join = JoinMode::Or;
    BlockTopology topology = BlockTopology::OrSew;
    std::optional<AttentionPlan> plan;
    LifConfig lif;
    AttentionOptions attention;
    std::size_t steps = 4;
    std::size_t in_channels = 1;
    std::size_t height = 28;
    std::size_t width = 28;
    std::uint64_t seed = 0;
};

/// Ordered layer graph built from an architecture string. Inputs are
/// [T, N, C, H, W]; the classifier output is averaged over T.
template <class Real>
class Network {
public:
    Network(const std::vector<ArchToken>& tokens, const NetworkOptions& options);
    Network(const std::string& arch, const NetworkOptions& options) : Network(parse_arch(arch), options) {
        arch_ = arch;
    }

    /// Logits [N, classes] = mean over T of the head output. Does not reset
    /// neuron state; call reset_states() between independent sequences.
    Tensor<Real> forward(const Tensor<Real>& x, ForwardContext<Real>& ctx);
    Tensor<Real> forward(const Tensor<Real>& x, NormMode mode = NormMode::Infer);

    void reset_states();

    std::vector<NamedTensor<Real>> parameters();
    std::vector<NamedBuffer<Real>> buffers();
    std::size_t parameter_count();

    /// Visits every layer, descending into blocks.
    void visit(const std::function<void(Layer<Real>&)>& f);

    std::vector<ResidualBlock<Real>*> blocks();
    ResidualBlock<Real>& block(const std::string& name);
    /// Record names of the shortcut operands, one per block.
    std::vector<std::string> shortcut_names();
    /// True when no residual join remains (every block pruned).
    bool is_linear();

    /// Architecture string of the built graph.
    std::string render() const;
    /// The architecture string the graph was built from.
    const std::string& arch() const { return arch_; }
    const std::vector<LayerPtr<Real>>& layers() const { return layers_; }
    const NetworkOptions& options() const { return options_; }
    std::size_t classes() const { return classes_; }

private:
    NetworkOptions options_;
    std::string arch_;
    std::vector<LayerPtr<Real>> layers_;
    std::size_t classes_ = 0;
};

/// Replicates a static batch [N, C, H, W] T times along a new leading axis.
template <class Real>
Tensor<Real> encode_static(const Tensor<Real>& images, std::size_t steps);

}  // namespace orsnn
