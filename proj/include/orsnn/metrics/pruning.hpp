#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orsnn/net/network.hpp"

namespace orsnn {

/// Per-epoch firing rate of each tracked layer. Append-only; epochs strictly
/// increase.
class FiringRateTrace {
public:
    void append(std::size_t epoch, const std::map<std::string, double>& rates);

    const std::vector<std::size_t>& epochs() const { return epochs_; }
    bool has(const std::string& layer) const { return series_.count(layer) != 0; }
    /// Rates of `layer`, aligned with epochs(); throws UnknownLayer.
    const std::vector<double>& series(const std::string& layer) const;
    std::vector<std::string> layers() const;
    std::size_t size() const { return epochs_.size(); }

    /// "epoch,layer,rate" rows, epochs ascending, layers sorted by name.
    std::string to_csv() const;
    static FiringRateTrace from_csv(const std::string& text);

    bool operator==(const FiringRateTrace&) const = default;

private:
    std::vector<std::size_t> epochs_;
    std::map<std::string, std::vector<double>> series_;
};

struct PruningEntry {
    std::string shortcut;
    bool flagged = false;
    // Start of the trailing run of exact zeros, as an index into the trace
    // and as the recorded epoch number.
    std::optional<std::size_t> first_zero_index;
    std::optional<std::size_t> first_zero_epoch;
};

struct PruningReport {
    std::size_t patience = 5;
    std::vector<PruningEntry> entries;

    std::vector<std::string> flagged() const;
    std::string render() const;
};

/// A shortcut is prunable when its rate is exactly zero for the last
/// `patience` recorded epochs. With fewer epochs than `patience` nothing is
/// flagged.
PruningReport detect_natural_pruning(const FiringRateTrace& trace, const std::vector<std::string>& shortcuts,
                                     std::size_t patience = 5);

struct PruningOutcome {
    std::vector<std::string> pruned;
    std::size_t parameters_before = 0;
    std::size_t parameters_after = 0;
};

/// Verifies on every batch that each flagged shortcut emits no spike, then
/// removes those shortcuts so the OR join passes the backbone through.
/// Refuses with VerificationFailed (naming the batch index) on any spike.
template <class Real>
PruningOutcome apply_pruning(Network<Real>& net, const std::vector<std::string>& shortcuts,
                             const std::vector<Tensor<Real>>& verification_batches);

}  // namespace orsnn
