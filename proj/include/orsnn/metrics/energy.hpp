#pragma once

#include <map>
#include <string>
#include <vector>

#include "orsnn/net/network.hpp"
#include "orsnn/residual/audit.hpp"

namespace orsnn {

/// Hout * Wout * k^2 * Cin * Cout for one sample and one time step. The layer
/// must have run at least once so its output extent is known.
template <class Real>
double conv_flops(const Conv2dLayer<Real>& layer);

/// Fin * Fout for one sample and one time step.
template <class Real>
double fc_flops(const DenseLayer<Real>& layer);

/// Energy per operation in picojoules (45 nm figures).
struct EnergyModel {
    double e_mac = 4.6;
    double e_ac = 0.9;
};

struct EnergyLine {
    std::string name;
    std::string kind;   // encoder | conv | dense | attention-mlp | attention-pool
    OpClass klass = OpClass::AC;
    double flops = 0.0;  // per sample over all T steps
    double rate = 1.0;   // input-nonzero fraction applied to flops
    double energy_pj = 0.0;
};

struct EnergyReport {
    std::vector<EnergyLine> lines;
    double total_pj = 0.0;  // exact sum of the line energies, per sample

    double total_uj() const { return total_pj * 1e-6; }
    double total_mj() const { return total_pj * 1e-9; }
    double mac_ops() const;
    double ac_ops() const;
    /// Human-readable table; the header states the accounting policy.
    std::string render() const;
    /// "layer,kind,class,flops,rate,energy_pj", shortest round-trip numbers.
    std::string to_csv() const;
    /// Inverse of to_csv; total_pj is re-summed in line order.
    static EnergyReport from_csv(const std::string& text);
};

/// Accounting policy printed at the head of every energy report.
extern const char* const kEnergyPolicy;

/// Energy per sample from recorded counters:
///   encoder                e_mac * FL
///   other conv / dense     e_ac * FL * fr, or e_mac * FL * fr when the
///                          layer saw non-binary input
///   attention MLP / conv   e_mac * FL (real-valued operands)
///   attention pooling      e_ac * count
/// FL is per-step FLOPs times T; fr is the layer's input-nonzero fraction.
/// Every name in `layers` must have a record.
EnergyReport estimate_energy(const SpikeRecord& record, const std::vector<std::string>& layers,
                             const EnergyModel& model = {});

/// Same, over every conv, dense and attention layer of `net`.
template <class Real>
EnergyReport estimate_energy(Network<Real>& net, const SpikeRecord& record, const EnergyModel& model = {});

/// Total output spikes of all spiking layers.
std::uint64_t spike_count(const SpikeRecord& record);

struct FiringRate {
    double per_step = 0.0;    // spikes / (neurons * T * samples)
    double per_window = 0.0;  // spikes / (neurons * samples): spikes per neuron per sample
};

/// Spiking layers and shortcut operands.
std::map<std::string, FiringRate> firing_rates(const SpikeRecord& record);

/// Network-wide spikes per neuron, both normalizations.
FiringRate mean_spikes_per_neuron(const SpikeRecord& record);

}  // namespace orsnn
