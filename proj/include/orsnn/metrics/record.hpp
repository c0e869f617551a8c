#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace orsnn {

enum class LayerRole {
    Encoder,    // first convolution; sees the raw (non-spike) input
    Conv,
    Dense,
    Spiking,    // LIF layer
    Attention,  // SynA weight computation
    Shortcut,   // shortcut operand entering a residual join
};

/// Per-layer counters accumulated over every forward pass of an evaluation
/// window.
struct LayerRecord {
    std::string name;
    LayerRole role = LayerRole::Conv;

    // Synaptic layers (encoder, conv, dense).
    std::uint64_t input_nonzero = 0;
    std::uint64_t input_elements = 0;
    std::uint64_t non_binary = 0;
    double max_non_binary = 0.0;
    double flops_per_step = 0.0;  // per sample per time step

    // Attention modules, per sample over the whole window.
    double attention_mac = 0.0;
    double attention_pooling = 0.0;

    // Spiking layers and shortcut operands.
    std::uint64_t spikes = 0;
    std::uint64_t spike_slots = 0;  // T * samples * neurons
    std::uint64_t neurons = 0;      // per sample per step

    std::uint64_t samples = 0;

    double input_rate() const {
        return input_elements == 0 ? 0.0 : static_cast<double>(input_nonzero) / static_cast<double>(input_elements);
    }
    double firing_rate() const {
        return spike_slots == 0 ? 0.0 : static_cast<double>(spikes) / static_cast<double>(spike_slots);
    }
    bool binary_input() const { return non_binary == 0; }
};

/// Everything the metrics need from a set of forward passes.
struct SpikeRecord {
    std::size_t steps = 0;
    std::uint64_t samples = 0;
    std::vector<LayerRecord> layers;  // in first-execution order

    LayerRecord& entry(const std::string& name, LayerRole role);
    const LayerRecord* find(const std::string& name) const;
    const LayerRecord& at(const std::string& name) const;

private:
    std::map<std::string, std::size_t> index_;
};

}  // namespace orsnn
