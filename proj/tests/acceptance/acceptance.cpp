// Acceptance gates 1-10. One PASS/FAIL line per gate; exit 1 if any fails.
// Usage: orsnn_acceptance [gate numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "orsnn/attention/syna.hpp"
#include "orsnn/io/config.hpp"
#include "orsnn/io/source.hpp"
#include "orsnn/metrics/energy.hpp"
#include "orsnn/metrics/pruning.hpp"
#include "orsnn/residual/audit.hpp"
#include "orsnn/residual/join.hpp"
#include "orsnn/tensor/init.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace orsnn;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

template <class Real>
bool binary(const Tensor<Real>& t) {
    const auto v = t.values();
    return std::all_of(v.begin(), v.end(), [](Real a) { return a == Real(0) || a == Real(1); });
}

// ---- 1 -----------------------------------------------------------------------

Outcome join_oracle() {
    const auto t0 = Clock::now();
    std::size_t mismatches = 0, pairs = 0;
    for (unsigned a = 0; a < 256; ++a) {
        for (unsigned b = 0; b < 256; ++b, ++pairs) {
            std::vector<float> xv(8), yv(8);
            for (unsigned i = 0; i < 8; ++i) {
                xv[i] = static_cast<float>((a >> i) & 1u);
                yv[i] = static_cast<float>((b >> i) & 1u);
            }
            const Tensor<float> x({2, 2, 2}, xv), y({2, 2, 2}, yv);
            const auto o = join(x, y, JoinMode::Or), n = join(x, y, JoinMode::And), ia = join(x, y, JoinMode::IAnd);
            for (unsigned k = 0; k < 8; ++k) {
                const unsigned xb = (a >> k) & 1u, yb = (b >> k) & 1u;
                mismatches += o[k] != static_cast<float>(xb | yb);
                mismatches += n[k] != static_cast<float>(xb & yb);
                mismatches += ia[k] != static_cast<float>((xb ^ 1u) & yb);
            }
        }
    }
    const double s = seconds_since(t0);
    return {mismatches == 0 && s < 1.0,
            std::to_string(pairs) + " tensor pairs x 3 joins, " + std::to_string(mismatches) + " mismatches, " + fmt(s, 3) +
                " s"};
}

// ---- 2 -----------------------------------------------------------------------

void silence_shortcut(ResidualBlock<float>& b) {
    for (auto& l : b.shortcut()) {
        if (auto* bn = dynamic_cast<BatchNormLayer<float>*>(l.get())) {
            for (auto& g : bn->gamma().mutable_values()) g = 0.0f;
            for (auto& v : bn->beta().mutable_values()) v = -1.0f;
        }
    }
}

Outcome pruning_equivalence() {
    const auto t0 = Clock::now();
    NetworkOptions o;
    o.steps = 2;
    o.height = o.width = 8;
    o.seed = 3;
    const std::string arch = "c8k3s1p1-BN-LIF-(OR-SEW Block(c16))-(OR-SEW Block(c32))-AP-FC4";
    Network<float> net(arch, o), ref(arch, o);
    for (auto* n : {&net, &ref}) silence_shortcut(n->block("block1"));

    std::mt19937_64 rng(4);
    std::vector<Tensor<float>> batches;
    for (int i = 0; i < 1000; ++i) {
        Tensor<float> img({2, 1, 8, 8});
        for (auto& v : img.mutable_values()) v = static_cast<float>(uniform(rng, 0.0, 1.0));
        batches.push_back(encode_static(img, 2));
    }
    apply_pruning(net, {"block1.shortcut"}, {batches.begin(), batches.begin() + 4});
    if (!net.block("block1").pruned()) return {false, "block1.shortcut was not removed"};

    std::size_t identical = 0;
    for (const auto& x : batches) {
        net.reset_states();
        ref.reset_states();
        const auto a = net.forward(x), b = ref.forward(x);
        identical += std::equal(a.values().begin(), a.values().end(), b.values().begin());
    }
    const double s = seconds_since(t0);
    return {identical == batches.size() && s < 60.0,
            std::to_string(identical) + "/1000 batches bit-identical, " + fmt(s, 3) + " s"};
}

// ---- 3 -----------------------------------------------------------------------

Outcome spike_drivenness() {
    const auto t0 = Clock::now();
    const Dataset test = load_data_path("data/mnist-subset/test");
    NetworkOptions o;
    o.steps = 4;
    o.seed = 1;
    const std::string arch = preset_arch("mnist");
    Network<float> or_net(arch, o);
    NetworkOptions add = o;
    add.join = JoinMode::Add;
    add.topology = BlockTopology::Sew;
    Network<float> add_net(arch, add);

    std::set<std::string> expected;
    for (auto* b : add_net.blocks()) expected.insert(b->name() + ".post.conv1");

    const std::size_t batches = 3, n = 4;
    std::size_t or_ok = 0, add_ok = 0, layers = 0;
    for (std::size_t b = 0; b < batches; ++b) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i) idx.push_back(b * n + i);
        const auto x = make_batch(test, idx, o.steps);
        const AuditReport r = audit_spike_drivenness(or_net, x, NormMode::Train);
        layers = r.lines.size();
        bool all_ac = !r.lines.empty() && r.lines.front().role == LayerRole::Encoder;
        for (std::size_t i = 1; i < r.lines.size(); ++i) all_ac = all_ac && r.lines[i].klass == OpClass::AC;
        or_ok += all_ac;

        const AuditReport ra = audit_spike_drivenness(add_net, x, NormMode::Train);
        std::set<std::string> mac;
        for (const auto* l : ra.violations()) mac.insert(l->name);
        add_ok += mac == expected;
    }
    const double s = seconds_since(t0);
    return {or_ok == batches && add_ok == batches && s < 60.0,
            "OR all-AC on " + std::to_string(or_ok) + "/" + std::to_string(batches) + " batches (" +
                std::to_string(layers) + " synaptic layers); ADD flags exactly the " +
                std::to_string(expected.size()) + " post-join convs on " + std::to_string(add_ok) + "/" +
                std::to_string(batches) + "; " + fmt(s, 3) + " s"};
}

// ---- 4 -----------------------------------------------------------------------

Outcome lif_trace() {
    LifConfig c;
    c.tau = 2.0;
    c.threshold = 1.0;
    c.reset = 0.0;
    // Traced by hand: U = H + (I - H)/2, spike at U >= 1, H = 0 after a spike.
    const std::vector<double> input = {1.5, 0.5, 2.5, 2.0, 1.0, 3.0, 0.2, 0.8, 1.9, 0.0};
    const std::vector<double> u = {0.75, 0.625, 1.5625, 1.0, 0.5, 1.75, 0.1, 0.45, 1.175, 0.0};
    const std::vector<double> s = {0, 0, 1, 1, 0, 1, 0, 0, 1, 0};
    LifState<double> st;
    double worst = 0.0;
    std::size_t spike_errors = 0;
    for (std::size_t t = 0; t < input.size(); ++t) {
        const auto spike = lif_step(st, Tensor<double>({1}, {input[t]}), c);
        spike_errors += spike[0] != s[t];
        worst = std::max(worst, std::abs(st.hidden[0] - (s[t] == 1.0 ? 0.0 : u[t])));
    }
    const auto run = lif_multistep(Tensor<double>({10, 1}, input), c);
    for (std::size_t t = 0; t < 10; ++t) spike_errors += run.spikes[t] != s[t];
    return {worst <= 1e-12 && spike_errors == 0,
            "max |H - hand| = " + fmt(worst) + ", spike mismatches " + std::to_string(spike_errors)};
}

// ---- 5 -----------------------------------------------------------------------

Outcome gradients() {
    const auto t0 = Clock::now();
    const auto cases = testing::gradient_suite(4, 1000);
    std::size_t bad = 0;
    std::set<std::string> ops;
    double worst = 0.0;
    std::string first;
    for (const auto& c : cases) {
        ops.insert(c.op);
        worst = std::max(worst, c.worst);
        if (!c.ok || c.checked == 0) {
            if (bad++ == 0) first = " (first: " + c.op + " seed " + std::to_string(c.seed) + " " + c.detail + ")";
        }
    }
    const double s = seconds_since(t0);
    return {bad == 0 && cases.size() >= 100 && ops.count("snn-2layer-smooth") && s < 120.0,
            std::to_string(cases.size()) + " cases over " + std::to_string(ops.size()) + " ops, " +
                std::to_string(bad) + " failures, worst rel " + fmt(worst) + first + ", " + fmt(s, 3) + " s"};
}

// ---- 6 -----------------------------------------------------------------------

SpikeRecord fixed_record(const std::vector<std::tuple<std::string, LayerRole, double, double>>& layers) {
    SpikeRecord r;
    r.steps = 1;
    r.samples = 1;
    for (const auto& [name, role, flops, rate] : layers) {
        LayerRecord& e = r.entry(name, role);
        e.flops_per_step = flops;
        e.input_elements = 1000;
        e.input_nonzero = static_cast<std::uint64_t>(std::llround(rate * 1000.0));
    }
    return r;
}

Outcome energy_oracle() {
    // encoder 1e6 FLOPs at MAC; conv 2e6 FLOPs at rate 0.25; fc 5120 FLOPs at rate 0.5
    const auto enc = estimate_energy(fixed_record({{"enc", LayerRole::Encoder, 1e6, 1.0}}), {"enc"});
    const auto three = estimate_energy(fixed_record({{"enc", LayerRole::Encoder, 1e6, 1.0},
                                                     {"conv", LayerRole::Conv, 2e6, 0.25},
                                                     {"fc", LayerRole::Dense, 5120, 0.5}}),
                                       {"enc", "conv", "fc"});
    const double hand_enc = 4.6, hand_three = 4.6 + 0.9e-6 * (2e6 * 0.25 + 5120 * 0.5);
    const double e1 = std::abs(enc.total_uj() - hand_enc) / hand_enc;
    const double e3 = std::abs(three.total_uj() - hand_three) / hand_three;
    return {e1 <= 1e-9 && e3 <= 1e-9, "encoder-only " + fmt(enc.total_uj(), 12) + " uJ (rel err " + fmt(e1) +
                                          "), 3-layer " + fmt(three.total_uj(), 12) + " vs hand " +
                                          fmt(hand_three, 12) + " uJ (rel err " + fmt(e3) + ")"};
}

// ---- 7 / 8 -----------------------------------------------------------------

struct RunResult {
    double final_acc = 0.0, best_acc = 0.0, seconds = 0.0;
    std::size_t epochs = 0;
};

RunResult run_config(const ExperimentConfig& cfg) {
    const auto t0 = Clock::now();
    auto [train_set, test_set] = load_datasets(cfg.data, cfg.train.seed);
    Network<float> net(cfg.arch, network_options(cfg, train_set.channels(), train_set.height(), train_set.width()));
    const TrainingLog log = train(net, train_set, test_set, cfg.train, 1, [](const EpochLog& e, const TrainingLog&) {
        std::cout << "    epoch " << e.epoch << " test acc " << fmt(e.test_accuracy) << std::endl;
    });
    RunResult r;
    r.seconds = seconds_since(t0);
    r.epochs = log.epochs.size();
    if (!log.epochs.empty()) r.final_acc = log.epochs.back().test_accuracy;
    for (const auto& e : log.epochs) r.best_acc = std::max(r.best_acc, e.test_accuracy);
    return r;
}

Outcome desk_mnist() {
    const ExperimentConfig cfg = load_config("configs/mnist-desk.ini");
    const RunResult r = run_config(cfg);
    // Judged on the last epoch, not the best one.
    return {r.final_acc >= 0.90 && r.epochs <= 10 && r.seconds <= 15 * 60,
            "final test acc " + fmt(r.final_acc) + " (best " + fmt(r.best_acc) + ") after " + std::to_string(r.epochs) +
                " epochs, T=" + std::to_string(cfg.train.steps) + ", " + fmt(r.seconds, 3) + " s"};
}

Outcome temporal_attention() {
    const auto t0 = Clock::now();
    const ExperimentConfig syna = load_config("configs/synth-temporal.ini");
    ExperimentConfig frame = syna;
    frame.train.steps = 1;
    frame.plan.reset();
    std::cout << "  SynA-T, T=" << syna.train.steps << '\n';
    const RunResult a = run_config(syna);
    std::cout << "  per-frame baseline, T=1\n";
    const RunResult b = run_config(frame);
    const double s = seconds_since(t0);
    return {a.final_acc >= 0.85 && b.final_acc <= 0.55 && s <= 10 * 60,
            "SynA-T " + fmt(a.final_acc) + ", T=1 baseline " + fmt(b.final_acc) + " (best " + fmt(b.best_acc) +
                "), " + fmt(s, 3) + " s"};
}

// ---- 9 -----------------------------------------------------------------------

Outcome binarity_and_placement() {
    const auto t0 = Clock::now();
    const LifConfig lif;
    std::mt19937_64 rng(9);
    std::size_t checked = 0, non_binary = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = testing::random_tensor({4, 2, 16, 6, 6}, rng, -3, 3, false);
        for (auto dim : {AttentionDim::Temporal, AttentionDim::Channel, AttentionDim::Spatial}) {
            const auto ma = make_attention<double>(dim, 4, 16, {}, lif, rng);
            const auto ia = make_attention<double>(dim, 4, 16, {}, lif, rng);
            non_binary += !binary(attention_weights(x, ma));
            non_binary += !binary(ia_weights(x, ia));
            checked += 2;
        }
    }
    const auto fixtures = testing::load_block_fixtures("tests/fixtures/block_layouts.txt");
    std::size_t matched = 0;
    for (const auto& [p, want] : fixtures) {
        bool ok = true;
        for (auto dim : {AttentionDim::Temporal, AttentionDim::Channel, AttentionDim::Spatial}) {
            const BlockLayout got = testing::or_sew_layout(p, dim);
            ok = ok && got.main == want.main && got.shortcut == want.shortcut && got.post == want.post;
        }
        matched += ok;
    }
    const double s = seconds_since(t0);
    return {non_binary == 0 && fixtures.size() == 4 && matched == 4 && s < 60.0,
            std::to_string(checked - non_binary) + "/" + std::to_string(checked) + " weight tensors binary; " +
                std::to_string(matched) + "/4 placements match the fixtures; " + fmt(s, 3) + " s"};
}

// ---- 10 ----------------------------------------------------------------------

Outcome natural_pruning() {
    // Recorded trace: block1 dies at epoch 4 and stays dead, block2 never does,
    // block3 hovers at 1e-6.
    FiringRateTrace t;
    const std::vector<double> b1 = {0.31, 0.12, 0.02, 0, 0, 0, 0, 0, 0, 0};
    const std::vector<double> b2 = {0.40, 0.35, 0.33, 0.30, 0.28, 0.27, 0.27, 0.26, 0.26, 0.25};
    for (std::size_t e = 0; e < b1.size(); ++e) {
        t.append(e + 1, {{"block1.shortcut", b1[e]}, {"block2.shortcut", b2[e]}, {"block3.shortcut", 1e-6}});
    }
    const auto r = detect_natural_pruning(t, {"block1.shortcut", "block2.shortcut", "block3.shortcut"}, 5);
    bool ok = r.entries.size() == 3 && r.flagged() == std::vector<std::string>{"block1.shortcut"};
    std::size_t epoch = 0;
    for (const auto& e : r.entries)
        if (e.shortcut == "block1.shortcut") epoch = e.first_zero_epoch.value_or(0);
    ok = ok && epoch == 4;

    FiringRateTrace tiny;
    for (std::size_t e = 1; e <= 10; ++e) tiny.append(e, {{"s", 1e-6}});
    const bool tiny_quiet = detect_natural_pruning(tiny, {"s"}, 5).flagged().empty();
    return {ok && tiny_quiet, "flagged " + std::to_string(r.flagged().size()) + " shortcut(s), first zero at epoch " +
                                  std::to_string(epoch) + " (expected 4); 1e-6 trace " +
                                  (tiny_quiet ? "not flagged" : "FLAGGED")};
}

}  // namespace

int main(int argc, char** argv) {
    fs::current_path(ORSNN_SOURCE_DIR);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> gates = {
        {"join-algebra oracle", join_oracle},
        {"OR absorption / pruning equivalence", pruning_equivalence},
        {"spike-drivenness audit", spike_drivenness},
        {"LIF ten-step trace", lif_trace},
        {"gradient suite", gradients},
        {"energy oracle", energy_oracle},
        {"desk MNIST gate", desk_mnist},
        {"temporal attention efficacy", temporal_attention},
        {"attention binarity and placements", binarity_and_placement},
        {"natural-pruning detector", natural_pruning},
    };
    std::set<std::size_t> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::stoul(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < gates.size(); ++i) {
        if (!wanted.empty() && !wanted.count(i + 1)) continue;
        Outcome o;
        try {
            o = gates[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " " << gates[i].first << ": " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
