#include "orsnn/residual/audit.hpp"

#include <iomanip>
#include <sstream>

namespace orsnn {

std::string_view to_string(OpClass c) {
    return c == OpClass::MAC ? "MAC" : "AC";
}

std::vector<const AuditLine*> AuditReport::violations() const {
    std::vector<const AuditLine*> out;
    for (const auto& l : lines) {
        if (l.role != LayerRole::Encoder && l.klass == OpClass::MAC) out.push_back(&l);
    }
    return out;
}

std::string AuditReport::render() const {
    std::ostringstream os;
    os << std::left << std::setw(28) << "layer" << std::setw(9) << "kind" << std::setw(6) << "class"
       << "nonzero_fraction\n";
    for (const auto& l : lines) {
        const char* kind = l.role == LayerRole::Encoder ? "encoder" : l.role == LayerRole::Dense ? "dense" : "conv";
        os << std::left << std::setw(28) << l.name << std::setw(9) << kind << std::setw(6) << to_string(l.klass)
           << std::fixed << std::setprecision(6) << l.nonzero_fraction;
        if (l.role != LayerRole::Encoder && l.non_binary > 0) {
            os << "  non-binary=" << l.non_binary << " max=" << std::setprecision(4) << l.max_non_binary;
        }
        os << '\n';
    }
    const auto bad = violations();
    os << (bad.empty() ? "spike-driven: yes\n" : "spike-driven: no (" + std::to_string(bad.size()) + " violating layers)\n");
    return os.str();
}

AuditReport classify_layers(const SpikeRecord& record) {
    AuditReport report;
    for (const auto& rec : record.layers) {
        if (rec.role != LayerRole::Encoder && rec.role != LayerRole::Conv && rec.role != LayerRole::Dense) continue;
        AuditLine line;
        line.name = rec.name;
        line.role = rec.role;
        line.klass = (rec.role == LayerRole::Encoder || !rec.binary_input()) ? OpClass::MAC : OpClass::AC;
        line.nonzero_fraction = rec.input_rate();
        line.non_binary = rec.non_binary;
        line.max_non_binary = rec.max_non_binary;
        report.lines.push_back(std::move(line));
    }
    return report;
}

template <class Real>
AuditReport audit_spike_drivenness(Network<Real>& net, const Tensor<Real>& batch, NormMode mode) {
    std::vector<std::vector<Real>> saved;
    auto buffers = net.buffers();
    if (mode == NormMode::Train) {
        for (const auto& b : buffers) saved.push_back(*b.values);
    }
    SpikeRecord record;
    ForwardContext<Real> ctx;
    ctx.mode = mode;
    ctx.record = &record;
    ctx.strict = false;
    net.reset_states();
    net.forward(batch, ctx);
    net.reset_states();
    for (std::size_t i = 0; i < saved.size(); ++i) *buffers[i].values = std::move(saved[i]);
    return classify_layers(record);
}

template AuditReport audit_spike_drivenness(Network<float>&, const Tensor<float>&, NormMode);
template AuditReport audit_spike_drivenness(Network<double>&, const Tensor<double>&, NormMode);

}  // namespace orsnn
