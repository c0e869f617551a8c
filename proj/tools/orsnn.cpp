// orsnn: train, evaluate, audit, cost and prune spiking residual networks.
//
// Exit codes: 0 success, 1 audit or pruning verification failure, 2 usage
// or environment error. Failures print one line to stderr:
//   error: kind=<ErrorKind> message=<text>
//
// Run directory written by `train` (the [experiment] out key):
//   config.ini       the config as parsed, defaults filled in
//   checkpoint.ckpt  network after the last completed epoch
//   trace.csv        epoch,layer,rate firing-rate trace
//   train_log.csv    epoch,loss,train_acc,test_acc,test_spikes,spikes_per_neuron,flagged
//   energy.csv       per-layer energy of the final network on the test set
// `report` adds summary.csv.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

#include "orsnn/io/checkpoint.hpp"
#include "orsnn/io/csv.hpp"
#include "orsnn/io/events.hpp"
#include "orsnn/io/source.hpp"
#include "orsnn/io/text.hpp"

namespace fs = std::filesystem;
using namespace orsnn;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

std::string join_names(const std::vector<std::string>& names, const char* empty = "-") {
    if (names.empty()) return empty;
    std::string out;
    for (const auto& n : names) out += (out.empty() ? "" : ";") + n;
    return out;
}

Tensor<float> batch_of(const Dataset& d, std::size_t first, std::size_t count, std::size_t steps) {
    std::vector<std::size_t> idx;
    for (std::size_t i = first; i < std::min(first + count, d.size()); ++i) idx.push_back(i);
    return make_batch(d, idx, steps);
}

std::size_t batch_count(const Dataset& d, std::size_t batch, std::size_t limit) {
    const std::size_t n = (d.size() + batch - 1) / batch;
    return limit == 0 ? n : std::min(n, limit);
}

void check_input(const Network<float>& net, const Dataset& d) {
    const auto& o = net.options();
    if (d.channels() != o.in_channels || d.height() != o.height || d.width() != o.width) {
        fail(ErrorKind::ShapeMismatch, "dataset samples are " + std::to_string(d.channels()) + "x" + std::to_string(d.height()) +
                                           "x" + std::to_string(d.width()) + ", the network takes " +
                                           std::to_string(o.in_channels) + "x" + std::to_string(o.height) + "x" +
                                           std::to_string(o.width));
    }
}

std::string energy_of(Network<float>& net, const Dataset& test, std::size_t steps, std::size_t batch,
                      EnergyReport* out = nullptr) {
    const EvalResult ev = evaluate(net, test, steps, batch);
    EnergyReport r = estimate_energy(net, ev.record);
    if (out) *out = r;
    return r.to_csv();
}

// ---- train ---------------------------------------------------------------

int cmd_train(const std::string& config_path, const std::string& resume) {
    const std::string config_text = read_text(config_path);
    ExperimentConfig cfg = parse_config(config_text);
    auto [train_set, test_set] = load_datasets(cfg.data, cfg.train.seed);
    const fs::path dir(cfg.out);
    fs::create_directories(dir);

    std::unique_ptr<Network<float>> net;
    std::size_t done = 0;
    FiringRateTrace trace;
    std::vector<std::string> old_rows;
    if (!resume.empty()) {
        LoadedCheckpoint ck = load_checkpoint(resume);
        if (ck.net->arch() != cfg.arch) {
            fail(ErrorKind::ArchMismatch, "checkpoint architecture '" + ck.net->arch() + "' differs from the config's '" +
                                              cfg.arch + "'");
        }
        net = std::move(ck.net);
        done = ck.meta.epoch;
        // Keep the history up to the resumed epoch.
        const fs::path trace_path = fs::path(resume).parent_path() / "trace.csv";
        if (fs::exists(trace_path)) {
            const FiringRateTrace old = FiringRateTrace::from_csv(read_text(trace_path.string()));
            for (std::size_t i = 0; i < old.epochs().size() && old.epochs()[i] <= done; ++i) {
                std::map<std::string, double> rates;
                for (const auto& l : old.layers()) rates[l] = old.series(l)[i];
                trace.append(old.epochs()[i], rates);
            }
        }
        const fs::path log_path = fs::path(resume).parent_path() / "train_log.csv";
        if (fs::exists(log_path)) {
            const CsvTable t = load_csv(log_path.string());
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
                if (parse_size(t.at(i, "epoch"), "train_log epoch") <= done) {
                    CsvTable one{t.header, {t.rows[i]}};
                    const std::string r = one.render();
                    old_rows.push_back(r.substr(r.find('\n') + 1));
                }
            }
        }
        std::cout << "resuming " << resume << " after epoch " << done << '\n';
    } else {
        net = std::make_unique<Network<float>>(
            cfg.arch, network_options(cfg, train_set.channels(), train_set.height(), train_set.width()));
    }
    check_input(*net, train_set);
    check_input(*net, test_set);
    write_text((dir / "config.ini").string(), render_config(cfg));
    std::cout << "network " << net->render() << " (" << net->parameter_count() << " parameters, T=" << cfg.train.steps
              << ")\n";

    TrainConfig tc = cfg.train;
    tc.epochs = cfg.train.epochs > done ? cfg.train.epochs - done : 0;
    auto write_logs = [&](const TrainingLog& log) {
        std::string csv = log.to_csv();
        const auto nl = csv.find('\n') + 1;
        std::string rows;
        for (const auto& r : old_rows) rows += r;
        write_text((dir / "train_log.csv").string(), csv.substr(0, nl) + rows + csv.substr(nl));
        write_text((dir / "trace.csv").string(), log.trace.to_csv());
    };
    const std::string ckpt = (dir / "checkpoint.ckpt").string();
    TrainingLog log;
    log.trace = trace;
    if (tc.epochs == 0) {
        std::cout << "all " << cfg.train.epochs << " epochs already done\n";
    } else {
        log = train(*net, train_set, test_set, tc, done + 1,
                    [&](const EpochLog& e, const TrainingLog& so_far) {
                        std::cout << "epoch " << e.epoch << " loss " << format_double(e.loss) << " train_acc "
                                  << format_double(e.train_accuracy) << " acc " << format_double(e.test_accuracy)
                                  << " spikes " << e.test_spikes << " flagged " << join_names(e.flagged) << " ("
                                  << std::fixed << std::setprecision(1) << e.seconds << std::defaultfloat
                                  << std::setprecision(6) << " s)\n"
                                  << std::flush;
                        save_checkpoint(*net, ckpt, {e.epoch, config_text});
                        write_logs(so_far);
                    },
                    trace);
    }
    write_logs(log);
    if (tc.epochs == 0) save_checkpoint(*net, ckpt, {done, config_text});
    write_text((dir / "energy.csv").string(), energy_of(*net, test_set, cfg.train.steps, cfg.train.batch_size));
    std::cout << "wrote " << dir.string() << "/{config.ini,checkpoint.ckpt,trace.csv,train_log.csv,energy.csv}\n";
    return kOk;
}

// ---- eval / audit / energy -------------------------------------------------

int cmd_eval(const std::string& ckpt_path, const std::string& data_path, std::size_t batch) {
    auto ck = load_checkpoint(ckpt_path);
    const Dataset d = load_data_path(data_path);
    check_input(*ck.net, d);
    const EvalResult r = evaluate(*ck.net, d, ck.net->options().steps, batch);
    std::cout << "samples " << r.samples << " accuracy " << format_double(r.accuracy) << " loss " << format_double(r.loss)
              << " spikes " << spike_count(r.record) << '\n';
    return kOk;
}

int cmd_audit(const std::string& ckpt_path, const std::string& data_path, std::size_t batch, std::size_t limit,
              const std::string& norm) {
    auto ck = load_checkpoint(ckpt_path);
    const Dataset d = load_data_path(data_path);
    if (d.size() == 0) fail(ErrorKind::EmptyDataset, "dataset " + data_path + " is empty");
    check_input(*ck.net, d);
    const NormMode mode = norm == "train" ? NormMode::Train : NormMode::Infer;
    const std::size_t steps = ck.net->options().steps;
    AuditReport merged;
    const std::size_t batches = batch_count(d, batch, limit);
    for (std::size_t b = 0; b < batches; ++b) {
        const AuditReport r = audit_spike_drivenness(*ck.net, batch_of(d, b * batch, batch, steps), mode);
        if (merged.lines.empty()) {
            merged = r;
            continue;
        }
        for (std::size_t i = 0; i < r.lines.size(); ++i) {
            auto& m = merged.lines.at(i);
            if (r.lines[i].klass == OpClass::MAC) m.klass = OpClass::MAC;
            m.non_binary += r.lines[i].non_binary;
            m.max_non_binary = std::max(m.max_non_binary, r.lines[i].max_non_binary);
            m.nonzero_fraction += (r.lines[i].nonzero_fraction - m.nonzero_fraction) / static_cast<double>(b + 1);
        }
    }
    std::cout << "audit over " << batches << " batch(es), norm=" << norm << '\n' << merged.render();
    const auto v = merged.violations();
    if (v.empty()) return kOk;
    std::cout << "MAC outside the encoder:";
    for (const auto* l : v) std::cout << ' ' << l->name;
    std::cout << '\n';
    return kFailed;
}

int cmd_energy(const std::string& ckpt_path, const std::string& data_path, std::size_t batch, const std::string& out) {
    auto ck = load_checkpoint(ckpt_path);
    const Dataset d = load_data_path(data_path);
    check_input(*ck.net, d);
    EnergyReport r;
    const std::string csv = energy_of(*ck.net, d, ck.net->options().steps, batch, &r);
    std::cout << r.render() << "MAC ops " << format_double(r.mac_ops()) << ", AC ops " << format_double(r.ac_ops()) << '\n';
    if (!out.empty()) write_text(out, csv);
    return kOk;
}

// ---- prune -----------------------------------------------------------------

int cmd_prune(const std::string& ckpt_path, const std::string& trace_path, const std::string& out,
              const std::string& data_path, std::size_t patience, std::size_t batch, std::size_t limit) {
    auto ck = load_checkpoint(ckpt_path);
    const FiringRateTrace trace = FiringRateTrace::from_csv(read_text(trace_path));
    std::vector<std::string> live;
    for (auto* b : ck.net->blocks()) {
        if (!b->pruned()) live.push_back(b->shortcut_name());
    }
    std::vector<std::string> tracked;
    for (const auto& s : live) {
        if (trace.has(s)) tracked.push_back(s);
    }
    const PruningReport report = detect_natural_pruning(trace, tracked, patience);
    std::cout << report.render();
    const auto flagged = report.flagged();
    if (flagged.empty()) {
        std::cout << "nothing to prune\n";
        return kOk;
    }
    Dataset d;
    if (!data_path.empty()) {
        d = load_data_path(data_path);
    } else if (!ck.meta.config.empty()) {
        const ExperimentConfig cfg = parse_config(ck.meta.config);
        d = load_datasets(cfg.data, cfg.train.seed).second;
    } else {
        fail(ErrorKind::DatasetNotFound, "verification needs --data (the checkpoint carries no config)");
    }
    check_input(*ck.net, d);
    std::vector<Tensor<float>> batches;
    for (std::size_t b = 0; b < batch_count(d, batch, limit); ++b) {
        batches.push_back(batch_of(d, b * batch, batch, ck.net->options().steps));
    }
    const PruningOutcome o = apply_pruning(*ck.net, flagged, batches);
    save_checkpoint(*ck.net, out, ck.meta);
    std::cout << "pruned " << join_names(o.pruned) << " after " << batches.size() << " verified batch(es); parameters "
              << o.parameters_before << " -> " << o.parameters_after << "\nwrote " << out << '\n';
    return kOk;
}

// ---- report ----------------------------------------------------------------

const char* kSummaryHeader =
    "run,arch,join,topology,attention,steps,params,epoch,test_acc,spikes,spikes_per_neuron,mac_ops,ac_ops,energy_uj";

std::string summary_row(const fs::path& dir) {
    auto ck = load_checkpoint((dir / "checkpoint.ckpt").string());
    const CsvTable log = load_csv((dir / "train_log.csv").string());
    if (log.rows.empty()) fail(ErrorKind::EmptyDataset, (dir / "train_log.csv").string() + " has no epochs");
    const std::size_t last = log.rows.size() - 1;
    std::string mac, ac, uj;
    if (fs::exists(dir / "energy.csv")) {
        const EnergyReport e = EnergyReport::from_csv(read_text((dir / "energy.csv").string()));
        mac = format_double(e.mac_ops());
        ac = format_double(e.ac_ops());
        uj = format_double(e.total_uj());
    }
    const auto& o = ck.net->options();
    if (ck.net->arch().find(',') != std::string::npos) fail(ErrorKind::ParseError, "architecture contains a comma");
    return dir.filename().string() + ',' + ck.net->arch() + ',' + std::string(to_string(o.join)) + ',' +
           std::string(to_string(o.topology)) + ',' + render_attention_plan(o.plan) + ',' + std::to_string(o.steps) + ',' +
           std::to_string(ck.net->parameter_count()) + ',' + log.at(last, "epoch") + ',' + log.at(last, "test_acc") + ',' +
           log.at(last, "test_spikes") + ',' + log.at(last, "spikes_per_neuron") + ',' + mac + ',' + ac + ',' + uj;
}

int cmd_report(const std::vector<std::string>& run_dirs) {
    for (const auto& r : run_dirs) {
        fs::path dir(r);
        while (dir.has_filename() == false && dir.has_parent_path() && dir != dir.parent_path()) dir = dir.parent_path();
        const std::string table = std::string(kSummaryHeader) + '\n' + summary_row(dir) + '\n';
        write_text((dir / "summary.csv").string(), table);
        std::cout << table;
    }
    return kOk;
}

// ---- synth -----------------------------------------------------------------

int cmd_synth(const std::string& kind, std::size_t count, std::size_t steps, std::size_t size, std::uint64_t seed,
              const std::string& out) {
    const FramedEventSet set = synth_events(parse_synth_kind(kind), count, steps, size, size, seed);
    save_events(set, out);
    std::cout << "wrote " << count << " clips [T=" << steps << ", 2, " << size << ", " << size << "] to " << out
              << (frame_histograms_equal(set, 2) ? " (per-frame histograms equal across classes)" : "") << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spike-driven residual SNNs with OR joins and synergistic attention"};
    app.require_subcommand(1);

    std::string config, resume, ckpt, data, trace, out, norm = "infer", kind = "moving-bar";
    std::vector<std::string> run_dirs;
    std::size_t batch = 64, batches = 0, patience = 5, count = 512, steps = 8, size = 16;
    std::uint64_t seed = 0;

    auto* train_cmd = app.add_subcommand("train", "train from a config; writes the run directory");
    train_cmd->add_option("--config", config, "experiment config")->required();
    train_cmd->add_option("--resume", resume, "checkpoint to continue from");

    auto* eval_cmd = app.add_subcommand("eval", "accuracy of a checkpoint");
    auto* audit_cmd = app.add_subcommand("audit", "MAC/AC classification; exit 1 unless spike-driven");
    auto* energy_cmd = app.add_subcommand("energy", "per-sample energy estimate");
    for (auto* c : {eval_cmd, audit_cmd, energy_cmd}) {
        c->add_option("--ckpt", ckpt, "checkpoint")->required();
        c->add_option("--data", data, "IDX directory or event container")->required();
        c->add_option("--batch", batch, "batch size")->capture_default_str();
    }
    audit_cmd->add_option("--batches", batches, "batches to audit, 0 = all")->capture_default_str();
    audit_cmd->add_option("--norm", norm, "batch norm statistics: infer (running) or train (batch)")
        ->check(CLI::IsMember({"infer", "train"}))
        ->capture_default_str();
    energy_cmd->add_option("--out", out, "write the report as CSV");

    auto* prune_cmd = app.add_subcommand("prune", "verify and remove naturally pruned shortcuts");
    prune_cmd->add_option("--ckpt", ckpt, "checkpoint")->required();
    prune_cmd->add_option("--trace", trace, "firing-rate trace (trace.csv)")->required();
    prune_cmd->add_option("--out", out, "pruned checkpoint path")->required();
    prune_cmd->add_option("--data", data, "verification data; defaults to the checkpoint config's test set");
    prune_cmd->add_option("--patience", patience, "epochs at exactly zero")->capture_default_str();
    prune_cmd->add_option("--batch", batch, "verification batch size")->capture_default_str();
    prune_cmd->add_option("--batches", batches, "verification batches, 0 = all")->capture_default_str();

    auto* report_cmd = app.add_subcommand("report", "summary table of a run directory");
    report_cmd->add_option("--run-dir", run_dirs, "run directory (repeatable)")->required();

    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic motion dataset");
    synth_cmd->add_option("--kind", kind, "moving-bar | two-class-motion")->capture_default_str();
    synth_cmd->add_option("--count", count, "clips")->capture_default_str();
    synth_cmd->add_option("--steps", steps, "frames per clip")->capture_default_str();
    synth_cmd->add_option("--size", size, "frame side in pixels")->capture_default_str();
    synth_cmd->add_option("--seed", seed, "generator seed")->capture_default_str();
    synth_cmd->add_option("--out", out, "event container path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (batch == 0) fail(ErrorKind::InvalidArgument, "--batch must be >= 1");
        if (*train_cmd) return cmd_train(config, resume);
        if (*eval_cmd) return cmd_eval(ckpt, data, batch);
        if (*audit_cmd) return cmd_audit(ckpt, data, batch, batches, norm);
        if (*energy_cmd) return cmd_energy(ckpt, data, batch, out);
        if (*prune_cmd) return cmd_prune(ckpt, trace, out, data, patience, batch, batches);
        if (*report_cmd) return cmd_report(run_dirs);
        if (*synth_cmd) return cmd_synth(kind, count, steps, size, seed, out);
    } catch (const Error& e) {
        std::cerr << "error: kind=" << kind_name(e.kind()) << " message=" << e.what() << '\n';
        return e.kind() == ErrorKind::VerificationFailed ? kFailed : kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: kind=Internal message=" << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
