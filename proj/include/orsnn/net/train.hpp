#pragma once

#include <functional>
#include <string>
#include <vector>

#include "orsnn/io/dataset.hpp"
#include "orsnn/metrics/energy.hpp"
#include "orsnn/metrics/pruning.hpp"
#include "orsnn/net/network.hpp"

namespace orsnn {

struct TrainConfig {
    double lr = 1e-2;
    std::size_t steps = 16;  // T
    std::size_t batch_size = 128;
    std::size_t epochs = 100;
    std::string optimizer = "adam";
    std::string loss = "cross-entropy";
    std::uint64_t seed = 0;
    std::vector<Transform> augment;
    std::size_t patience = 5;  // natural-pruning patience, in epochs

    /// Per-dataset defaults: mnist, fashion-mnist, dvs-gesture, cifar10-dvs.
    static TrainConfig defaults_for(const std::string& dataset);
    bool operator==(const TrainConfig&) const = default;
};

/// Adam without weight decay.
template <class Real>
class Adam {
public:
    Adam(std::vector<NamedTensor<Real>> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);

    void zero_grad();
    void step();
    std::size_t steps_taken() const { return t_; }

private:
    std::vector<NamedTensor<Real>> params_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
    std::size_t samples = 0;
    SpikeRecord record;
};

/// Inference over the whole set in batches; neuron states reset per batch.
template <class Real>
EvalResult evaluate(Network<Real>& net, const Dataset& data, std::size_t steps, std::size_t batch_size);

struct EpochLog {
    std::size_t epoch = 0;
    double loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::uint64_t test_spikes = 0;
    double spikes_per_neuron = 0.0;  // per test sample over the window
    std::vector<std::string> flagged;
    double seconds = 0.0;
};

struct TrainingLog {
    std::vector<EpochLog> epochs;
    FiringRateTrace trace;

    /// "epoch,loss,train_acc,test_acc,test_spikes,spikes_per_neuron,flagged";
    /// wall-clock time is left out so reruns are byte-identical.
    std::string to_csv() const;
};

/// Called after every epoch with that epoch's entry and the log so far.
using EpochCallback = std::function<void(const EpochLog&, const TrainingLog&)>;

/// Cross-entropy on time-averaged logits, BPTT through all steps, Adam.
/// Epoch numbering starts at `first_epoch` (1 for a fresh run). After each
/// epoch the test set is evaluated, shortcut firing rates are appended to
/// the trace and `on_epoch` is called. A non-finite loss aborts with
/// Divergence.
template <class Real>
TrainingLog train(Network<Real>& net, const Dataset& train_set, const Dataset& test_set, const TrainConfig& cfg,
                  std::size_t first_epoch = 1, const EpochCallback& on_epoch = {},
                  FiringRateTrace trace = {});

}  // namespace orsnn
