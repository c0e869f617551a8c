#include "orsnn/metrics/energy.hpp"

#include <iomanip>
#include <sstream>

#include "orsnn/io/csv.hpp"
#include "orsnn/io/text.hpp"

namespace orsnn {

const char* const kEnergyPolicy =
    "# energy per sample; E_MAC=4.6pJ E_AC=0.9pJ unless overridden\n"
    "# encoder conv: MAC at full FLOPs; other conv/fc: FLOPs x input-nonzero fraction, AC if the input was binary, "
    "else MAC\n"
    "# attention MLP/conv: MAC at full FLOPs; attention pooling: AC per reduction\n"
    "# bias additions and batch-norm arithmetic are not counted\n";

template <class Real>
double conv_flops(const Conv2dLayer<Real>& layer) {
    const auto out = layer.bound_output();
    if (!out) fail(ErrorKind::InvalidArgument, layer.name() + ": output shape unknown until the layer has run");
    const double k = static_cast<double>(layer.kernel());
    return static_cast<double>(out->first * out->second) * k * k * static_cast<double>(layer.in_channels()) *
           static_cast<double>(layer.out_channels());
}

template <class Real>
double fc_flops(const DenseLayer<Real>& layer) {
    return static_cast<double>(layer.in_features()) * static_cast<double>(layer.out_features());
}

double EnergyReport::mac_ops() const {
    double n = 0;
    for (const auto& l : lines) n += l.klass == OpClass::MAC ? l.flops * l.rate : 0.0;
    return n;
}

double EnergyReport::ac_ops() const {
    double n = 0;
    for (const auto& l : lines) n += l.klass == OpClass::AC ? l.flops * l.rate : 0.0;
    return n;
}

std::string EnergyReport::render() const {
    std::ostringstream os;
    os << kEnergyPolicy;
    os << std::left << std::setw(28) << "layer" << std::setw(16) << "kind" << std::setw(6) << "class" << std::setw(16)
       << "flops" << std::setw(12) << "rate" << "energy_pJ\n";
    for (const auto& l : lines) {
        os << std::left << std::setw(28) << l.name << std::setw(16) << l.kind << std::setw(6) << to_string(l.klass)
           << std::setw(16) << std::setprecision(10) << l.flops << std::setw(12) << std::setprecision(6) << l.rate
           << std::setprecision(10) << l.energy_pj << '\n';
    }
    os << "total: " << std::setprecision(10) << total_pj << " pJ = " << total_uj() << " uJ = " << total_mj() << " mJ\n";
    return os.str();
}

std::string EnergyReport::to_csv() const {
    std::string out = "layer,kind,class,flops,rate,energy_pj\n";
    for (const auto& l : lines) {
        out += l.name + ',' + l.kind + ',' + std::string(to_string(l.klass)) + ',' + format_double(l.flops) + ',' +
               format_double(l.rate) + ',' + format_double(l.energy_pj) + '\n';
    }
    return out;
}

EnergyReport EnergyReport::from_csv(const std::string& text) {
    const CsvTable t = parse_csv(text);
    EnergyReport r;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        EnergyLine l;
        l.name = t.at(i, "layer");
        l.kind = t.at(i, "kind");
        const std::string& k = t.at(i, "class");
        if (k != "MAC" && k != "AC") fail(ErrorKind::ParseError, "energy row " + l.name + ": class '" + k + "'");
        l.klass = k == "MAC" ? OpClass::MAC : OpClass::AC;
        l.flops = parse_double(t.at(i, "flops"), "energy flops");
        l.rate = parse_double(t.at(i, "rate"), "energy rate");
        l.energy_pj = parse_double(t.at(i, "energy_pj"), "energy_pj");
        r.total_pj += l.energy_pj;
        r.lines.push_back(std::move(l));
    }
    return r;
}

EnergyReport estimate_energy(const SpikeRecord& record, const std::vector<std::string>& layers, const EnergyModel& model) {
    EnergyReport report;
    const double steps = static_cast<double>(record.steps == 0 ? 1 : record.steps);
    auto push = [&](EnergyLine line) {
        line.energy_pj = (line.klass == OpClass::MAC ? model.e_mac : model.e_ac) * line.flops * line.rate;
        report.total_pj += line.energy_pj;
        report.lines.push_back(std::move(line));
    };
    for (const auto& name : layers) {
        const LayerRecord& rec = record.at(name);
        switch (rec.role) {
            case LayerRole::Encoder:
                push({name, "encoder", OpClass::MAC, rec.flops_per_step * steps, 1.0, 0.0});
                break;
            case LayerRole::Conv:
            case LayerRole::Dense:
                push({name, rec.role == LayerRole::Conv ? "conv" : "dense",
                      rec.binary_input() ? OpClass::AC : OpClass::MAC, rec.flops_per_step * steps, rec.input_rate(), 0.0});
                break;
            case LayerRole::Attention:
                push({name + ".mlp", "attention-mlp", OpClass::MAC, rec.attention_mac, 1.0, 0.0});
                push({name + ".pool", "attention-pool", OpClass::AC, rec.attention_pooling, 1.0, 0.0});
                break;
            case LayerRole::Spiking:
            case LayerRole::Shortcut:
                fail(ErrorKind::InvalidArgument, name + " is not a synaptic layer");
        }
    }
    return report;
}

template <class Real>
EnergyReport estimate_energy(Network<Real>& net, const SpikeRecord& record, const EnergyModel& model) {
    std::vector<std::string> names;
    net.visit([&](Layer<Real>& l) {
        if (l.kind() == LayerKind::Conv || l.kind() == LayerKind::Dense || l.kind() == LayerKind::Attention) {
            names.push_back(l.name());
        }
    });
    return estimate_energy(record, names, model);
}

std::uint64_t spike_count(const SpikeRecord& record) {
    std::uint64_t n = 0;
    for (const auto& rec : record.layers) {
        if (rec.role == LayerRole::Spiking) n += rec.spikes;
    }
    return n;
}

std::map<std::string, FiringRate> firing_rates(const SpikeRecord& record) {
    std::map<std::string, FiringRate> out;
    for (const auto& rec : record.layers) {
        if (rec.role != LayerRole::Spiking && rec.role != LayerRole::Shortcut) continue;
        FiringRate fr;
        fr.per_step = rec.firing_rate();
        const double denom = static_cast<double>(rec.neurons) * static_cast<double>(rec.samples);
        fr.per_window = denom == 0.0 ? 0.0 : static_cast<double>(rec.spikes) / denom;
        out.emplace(rec.name, fr);
    }
    return out;
}

FiringRate mean_spikes_per_neuron(const SpikeRecord& record) {
    double spikes = 0, slots = 0, neuron_samples = 0;
    for (const auto& rec : record.layers) {
        if (rec.role != LayerRole::Spiking) continue;
        spikes += static_cast<double>(rec.spikes);
        slots += static_cast<double>(rec.spike_slots);
        neuron_samples += static_cast<double>(rec.neurons) * static_cast<double>(rec.samples);
    }
    FiringRate fr;
    fr.per_step = slots == 0 ? 0.0 : spikes / slots;
    fr.per_window = neuron_samples == 0 ? 0.0 : spikes / neuron_samples;
    return fr;
}

template double conv_flops(const Conv2dLayer<float>&);
template double conv_flops(const Conv2dLayer<double>&);
template double fc_flops(const DenseLayer<float>&);
template double fc_flops(const DenseLayer<double>&);
template EnergyReport estimate_energy(Network<float>&, const SpikeRecord&, const EnergyModel&);
template EnergyReport estimate_energy(Network<double>&, const SpikeRecord&, const EnergyModel&);

}  // namespace orsnn
