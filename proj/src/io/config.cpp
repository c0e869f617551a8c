#include "orsnn/io/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "orsnn/io/text.hpp"

namespace orsnn {

namespace {

bool parse_bool(const std::string& v, const std::string& what) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorKind::ParseError, what + ": '" + v + "' is not a boolean");
}

struct Entry {
    std::string value;
    std::size_t line;
};

using Section = std::map<std::string, Entry>;

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, Section> sections;
    std::istringstream is(text);
    std::string raw, current;
    std::size_t lineno = 0;
    const std::map<std::string, std::vector<std::string>> known = {
        {"experiment", {"name", "dataset", "arch", "join", "topology", "attention", "seed", "out"}},
        {"lif", {"tau", "threshold", "reset", "alpha", "detach_reset"}},
        {"train", {"lr", "steps", "batch", "epochs", "optimizer", "loss", "augment", "patience"}},
        {"data", {"kind", "train_images", "train_labels", "test_images", "test_labels", "train_events", "test_events",
                  "synth_kind", "synth_train", "synth_test", "synth_steps", "synth_size", "limit_train", "limit_test"}},
        {"attention", {"temporal_reduction", "channel_reduction", "spatial_kernel"}},
    };
    while (std::getline(is, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = "config line " + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') fail(ErrorKind::ParseError, where + ": unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (!known.count(current)) fail(ErrorKind::ParseError, where + ": unknown section [" + current + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorKind::ParseError, where + ": expected 'key = value'");
        if (current.empty()) fail(ErrorKind::ParseError, where + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const auto& keys = known.at(current);
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            fail(ErrorKind::ParseError, where + ": unknown key '" + key + "' in [" + current + "]");
        }
        if (sections[current].count(key)) fail(ErrorKind::ParseError, where + ": duplicate key '" + key + "'");
        sections[current][key] = {trim(line.substr(eq + 1)), lineno};
    }

    auto get = [&](const std::string& sec, const std::string& key) -> const Entry* {
        auto s = sections.find(sec);
        if (s == sections.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    };
    auto label = [](const std::string& sec, const std::string& key, const Entry& e) {
        return "config line " + std::to_string(e.line) + " [" + sec + "] " + key;
    };
    auto str = [&](const std::string& sec, const std::string& key, std::string& dst) {
        if (const auto* e = get(sec, key)) dst = e->value;
    };
    auto num = [&](const std::string& sec, const std::string& key, double& dst) {
        if (const auto* e = get(sec, key)) dst = parse_double(e->value, label(sec, key, *e));
    };
    auto size = [&](const std::string& sec, const std::string& key, std::size_t& dst) {
        if (const auto* e = get(sec, key)) dst = parse_size(e->value, label(sec, key, *e));
    };

    ExperimentConfig c;
    str("experiment", "dataset", c.dataset);
    try {
        c.train = TrainConfig::defaults_for(c.dataset);
    } catch (const Error&) {
        c.train = TrainConfig{};  // unknown dataset: generic defaults
    }
    str("experiment", "name", c.name);
    str("experiment", "arch", c.arch);
    str("experiment", "out", c.out);
    if (const auto* e = get("experiment", "join")) c.join = parse_join_mode(e->value);
    if (const auto* e = get("experiment", "topology")) c.topology = parse_block_topology(e->value);
    if (const auto* e = get("experiment", "attention")) c.plan = parse_attention_plan(e->value);
    if (const auto* e = get("experiment", "seed")) c.train.seed = parse_size(e->value, label("experiment", "seed", *e));

    num("lif", "tau", c.lif.tau);
    num("lif", "threshold", c.lif.threshold);
    num("lif", "reset", c.lif.reset);
    num("lif", "alpha", c.lif.surrogate_alpha);
    if (const auto* e = get("lif", "detach_reset")) c.lif.detach_reset = parse_bool(e->value, label("lif", "detach_reset", *e));
    c.lif.validate();

    num("train", "lr", c.train.lr);
    size("train", "steps", c.train.steps);
    size("train", "batch", c.train.batch_size);
    size("train", "epochs", c.train.epochs);
    str("train", "optimizer", c.train.optimizer);
    str("train", "loss", c.train.loss);
    if (const auto* e = get("train", "augment")) c.train.augment = parse_transforms(e->value);
    size("train", "patience", c.train.patience);

    str("data", "kind", c.data.kind);
    if (c.data.kind != "idx" && c.data.kind != "events" && c.data.kind != "synthetic") {
        fail(ErrorKind::ParseError, "[data] kind must be idx, events or synthetic, got '" + c.data.kind + "'");
    }
    str("data", "train_images", c.data.train_images);
    str("data", "train_labels", c.data.train_labels);
    str("data", "test_images", c.data.test_images);
    str("data", "test_labels", c.data.test_labels);
    str("data", "train_events", c.data.train_events);
    str("data", "test_events", c.data.test_events);
    str("data", "synth_kind", c.data.synth_kind);
    parse_synth_kind(c.data.synth_kind);
    size("data", "synth_train", c.data.synth_train);
    size("data", "synth_test", c.data.synth_test);
    size("data", "synth_steps", c.data.synth_steps);
    size("data", "synth_size", c.data.synth_size);
    size("data", "limit_train", c.data.limit_train);
    size("data", "limit_test", c.data.limit_test);

    size("attention", "temporal_reduction", c.attention.temporal_reduction);
    size("attention", "channel_reduction", c.attention.channel_reduction);
    size("attention", "spatial_kernel", c.attention.spatial_kernel);

    if (c.arch.empty()) fail(ErrorKind::ParseError, "[experiment] arch is required");
    if (c.arch.rfind("preset:", 0) == 0) c.arch = preset_arch(c.arch.substr(7));
    parse_arch(c.arch);
    return c;
}

std::string render_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[experiment]\n"
       << "name = " << c.name << '\n'
       << "dataset = " << c.dataset << '\n'
       << "arch = " << c.arch << '\n'
       << "join = " << to_string(c.join) << '\n'
       << "topology = " << to_string(c.topology) << '\n'
       << "attention = " << render_attention_plan(c.plan) << '\n'
       << "seed = " << c.train.seed << '\n'
       << "out = " << c.out << '\n'
       << "\n[lif]\n"
       << "tau = " << format_double(c.lif.tau) << '\n'
       << "threshold = " << format_double(c.lif.threshold) << '\n'
       << "reset = " << format_double(c.lif.reset) << '\n'
       << "alpha = " << format_double(c.lif.surrogate_alpha) << '\n'
       << "detach_reset = " << (c.lif.detach_reset ? "true" : "false") << '\n'
       << "\n[train]\n"
       << "lr = " << format_double(c.train.lr) << '\n'
       << "steps = " << c.train.steps << '\n'
       << "batch = " << c.train.batch_size << '\n'
       << "epochs = " << c.train.epochs << '\n'
       << "optimizer = " << c.train.optimizer << '\n'
       << "loss = " << c.train.loss << '\n'
       << "augment = " << render_transforms(c.train.augment) << '\n'
       << "patience = " << c.train.patience << '\n'
       << "\n[data]\n"
       << "kind = " << c.data.kind << '\n'
       << "train_images = " << c.data.train_images << '\n'
       << "train_labels = " << c.data.train_labels << '\n'
       << "test_images = " << c.data.test_images << '\n'
       << "test_labels = " << c.data.test_labels << '\n'
       << "train_events = " << c.data.train_events << '\n'
       << "test_events = " << c.data.test_events << '\n'
       << "synth_kind = " << c.data.synth_kind << '\n'
       << "synth_train = " << c.data.synth_train << '\n'
       << "synth_test = " << c.data.synth_test << '\n'
       << "synth_steps = " << c.data.synth_steps << '\n'
       << "synth_size = " << c.data.synth_size << '\n'
       << "limit_train = " << c.data.limit_train << '\n'
       << "limit_test = " << c.data.limit_test << '\n'
       << "\n[attention]\n"
       << "temporal_reduction = " << c.attention.temporal_reduction << '\n'
       << "channel_reduction = " << c.attention.channel_reduction << '\n'
       << "spatial_kernel = " << c.attention.spatial_kernel << '\n';
    return os.str();
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::DatasetNotFound, "cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

NetworkOptions network_options(const ExperimentConfig& c, std::size_t in_channels, std::size_t height, std::size_t width) {
    NetworkOptions o;
    o.join = c.join;
    o.topology = c.topology;
    o.plan = c.plan;
    o.lif = c.lif;
    o.attention = c.attention;
    o.steps = c.train.steps;
    o.in_channels = in_channels;
    o.height = height;
    o.width = width;
    o.seed = c.train.seed;
    return o;
}

}  // namespace orsnn
