#pragma once

#include <string>
#include <vector>

#include "orsnn/net/network.hpp"

namespace orsnn {

enum class OpClass { MAC, AC };

std::string_view to_string(OpClass c);

struct AuditLine {
    std::string name;
    LayerRole role = LayerRole::Conv;  // Encoder, Conv or Dense
    OpClass klass = OpClass::AC;
    double nonzero_fraction = 0.0;
    std::uint64_t non_binary = 0;
    double max_non_binary = 0.0;
};

struct AuditReport {
    std::vector<AuditLine> lines;  // every conv/dense layer in execution order

    /// Layers outside the encoder whose input was not binary.
    std::vector<const AuditLine*> violations() const;
    /// True when every non-encoder conv/dense layer is AC.
    bool spike_driven() const { return violations().empty(); }
    /// One line per layer: name, kind, class, nonzero-input fraction.
    std::string render() const;
};

/// Classifies each synaptic layer from recorded input statistics: the encoder
/// is MAC by definition; any other layer is MAC if it saw a non-binary input
/// element, AC otherwise.
AuditReport classify_layers(const SpikeRecord& record);

/// Runs `batch` through `net` (permissive joins, states reset before and
/// after) and classifies every conv/dense layer. With NormMode::Train the
/// pass normalizes with batch statistics; running statistics are restored
/// afterwards so the network is left unchanged.
template <class Real>
AuditReport audit_spike_drivenness(Network<Real>& net, const Tensor<Real>& batch, NormMode mode = NormMode::Infer);

}  // namespace orsnn
