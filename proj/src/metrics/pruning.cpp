#include "orsnn/metrics/pruning.hpp"

#include <charconv>
#include <iomanip>
#include <set>
#include <sstream>

namespace orsnn {

void FiringRateTrace::append(std::size_t epoch, const std::map<std::string, double>& rates) {
    if (!epochs_.empty() && epoch <= epochs_.back()) {
        fail(ErrorKind::InvalidArgument, "trace epochs must increase: " + std::to_string(epoch) + " after " +
                                             std::to_string(epochs_.back()));
    }
    if (!epochs_.empty()) {
        if (rates.size() != series_.size()) fail(ErrorKind::InvalidArgument, "trace layer set changed between epochs");
        for (const auto& [name, _] : rates) {
            if (!series_.count(name)) fail(ErrorKind::InvalidArgument, "trace layer set changed: new layer " + name);
        }
    }
    for (const auto& [name, rate] : rates) {
        if (!(rate >= 0.0 && rate <= 1.0)) {
            fail(ErrorKind::InvalidArgument, "firing rate of " + name + " outside [0, 1]");
        }
        series_[name].push_back(rate);
    }
    epochs_.push_back(epoch);
}

const std::vector<double>& FiringRateTrace::series(const std::string& layer) const {
    auto it = series_.find(layer);
    if (it == series_.end()) fail(ErrorKind::UnknownLayer, "trace has no layer '" + layer + "'");
    return it->second;
}

std::vector<std::string> FiringRateTrace::layers() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : series_) out.push_back(name);
    return out;
}

std::string FiringRateTrace::to_csv() const {
    std::ostringstream os;
    os << "epoch,layer,rate\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < epochs_.size(); ++i) {
        for (const auto& [name, values] : series_) os << epochs_[i] << ',' << name << ',' << values[i] << '\n';
    }
    return os.str();
}

FiringRateTrace FiringRateTrace::from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "epoch,layer,rate") {
        fail(ErrorKind::ParseError, "firing-rate trace must start with 'epoch,layer,rate'");
    }
    FiringRateTrace trace;
    std::optional<std::size_t> current;
    std::map<std::string, double> row;
    std::size_t lineno = 1;
    auto flush = [&] {
        if (current) trace.append(*current, row);
        row.clear();
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.rfind(',');
        if (c1 == std::string::npos || c1 == c2) {
            fail(ErrorKind::ParseError, "trace line " + std::to_string(lineno) + ": expected epoch,layer,rate");
        }
        std::size_t epoch = 0;
        const auto r = std::from_chars(line.data(), line.data() + c1, epoch);
        if (r.ec != std::errc() || r.ptr != line.data() + c1) {
            fail(ErrorKind::ParseError, "trace line " + std::to_string(lineno) + ": bad epoch");
        }
        double rate = 0;
        try {
            std::size_t used = 0;
            rate = std::stod(line.substr(c2 + 1), &used);
            if (used != line.size() - c2 - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail(ErrorKind::ParseError, "trace line " + std::to_string(lineno) + ": bad rate");
        }
        if (!current || epoch != *current) {
            flush();
            current = epoch;
        }
        row[line.substr(c1 + 1, c2 - c1 - 1)] = rate;
    }
    flush();
    return trace;
}

std::vector<std::string> PruningReport::flagged() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
        if (e.flagged) out.push_back(e.shortcut);
    }
    return out;
}

std::string PruningReport::render() const {
    std::ostringstream os;
    os << "shortcut,flagged,first_zero_index,first_zero_epoch\n";
    for (const auto& e : entries) {
        os << e.shortcut << ',' << (e.flagged ? "yes" : "no") << ','
           << (e.first_zero_index ? std::to_string(*e.first_zero_index) : "") << ','
           << (e.first_zero_epoch ? std::to_string(*e.first_zero_epoch) : "") << '\n';
    }
    return os.str();
}

PruningReport detect_natural_pruning(const FiringRateTrace& trace, const std::vector<std::string>& shortcuts,
                                     std::size_t patience) {
    if (patience == 0) fail(ErrorKind::InvalidArgument, "pruning patience must be >= 1");
    PruningReport report;
    report.patience = patience;
    for (const auto& name : shortcuts) {
        const auto& rates = trace.series(name);
        PruningEntry e;
        e.shortcut = name;
        std::size_t run = 0;
        while (run < rates.size() && rates[rates.size() - 1 - run] == 0.0) ++run;
        if (run > 0) {
            e.first_zero_index = rates.size() - run;
            e.first_zero_epoch = trace.epochs()[*e.first_zero_index];
        }
        e.flagged = run >= patience;
        report.entries.push_back(std::move(e));
    }
    return report;
}

template <class Real>
PruningOutcome apply_pruning(Network<Real>& net, const std::vector<std::string>& shortcuts,
                             const std::vector<Tensor<Real>>& verification_batches) {
    PruningOutcome outcome;
    outcome.parameters_before = net.parameter_count();
    std::vector<ResidualBlock<Real>*> targets;
    for (const auto& name : shortcuts) {
        auto& b = net.block(name);
        if (b.pruned()) continue;
        if (b.spec().join != JoinMode::Or) {
            fail(ErrorKind::InvalidArgument, b.name() + ": only OR joins absorb a silent shortcut; join is " +
                                                 std::string(to_string(b.spec().join)));
        }
        targets.push_back(&b);
    }
    if (targets.empty()) {
        outcome.parameters_after = outcome.parameters_before;
        return outcome;
    }
    if (verification_batches.empty()) fail(ErrorKind::VerificationFailed, "pruning needs at least one verification batch");
    for (std::size_t i = 0; i < verification_batches.size(); ++i) {
        net.reset_states();
        ForwardContext<Real> ctx;
        net.forward(verification_batches[i], ctx);
        for (auto* b : targets) {
            if (b->last_shortcut_nonzero() != 0) {
                net.reset_states();
                fail(ErrorKind::VerificationFailed, "refusing to prune " + b->shortcut_name() + ": " +
                                                        std::to_string(b->last_shortcut_nonzero()) +
                                                        " spikes on verification batch " + std::to_string(i));
            }
        }
    }
    net.reset_states();
    for (auto* b : targets) {
        b->prune();
        outcome.pruned.push_back(b->shortcut_name());
    }
    outcome.parameters_after = net.parameter_count();
    return outcome;
}

template PruningOutcome apply_pruning(Network<float>&, const std::vector<std::string>&, const std::vector<Tensor<float>>&);
template PruningOutcome apply_pruning(Network<double>&, const std::vector<std::string>&,
                                      const std::vector<Tensor<double>>&);

}  // namespace orsnn
