#include "orsnn/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "orsnn/io/idx.hpp"
#include "orsnn/io/text.hpp"

namespace orsnn {

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");

namespace {

constexpr std::string_view kMagic = "ORSNN-CKPT";
constexpr int kVersion = 1;

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

template <class T>
void put(std::string& out, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(b, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) fail(ErrorKind::CorruptPayload, "checkpoint payload ends early");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

struct Slot {
    std::string name;
    std::span<float> data;
};

std::vector<Slot> slots(Network<float>& net) {
    std::vector<Slot> out;
    for (auto& p : net.parameters()) out.push_back({p.name, p.tensor->mutable_values()});
    for (auto& b : net.buffers()) out.push_back({b.name, std::span<float>(*b.values)});
    return out;
}

// Reads one "key value" header line.
std::string field(std::istream& is, const std::string& key) {
    std::string line;
    if (!std::getline(is, line)) fail(ErrorKind::Truncated, "checkpoint header ends before '" + key + "'");
    const auto sp = line.find(' ');
    const std::string k = line.substr(0, sp);
    if (k != key) fail(ErrorKind::CorruptPayload, "checkpoint header: expected '" + key + "', found '" + k + "'");
    return sp == std::string::npos ? std::string() : line.substr(sp + 1);
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string encode_checkpoint(Network<float>& net, const CheckpointMeta& meta) {
    const NetworkOptions& o = net.options();
    std::string payload;
    const auto all = slots(net);
    for (const auto& s : all) {
        put<std::uint32_t>(payload, static_cast<std::uint32_t>(s.name.size()));
        payload += s.name;
        put<std::uint64_t>(payload, s.data.size());
        for (float v : s.data) put<float>(payload, v);
    }
    std::string pruned;
    for (auto* b : net.blocks()) {
        if (b->pruned()) pruned += (pruned.empty() ? "" : ",") + b->name();
    }
    if (net.arch().find('\n') != std::string::npos) fail(ErrorKind::InvalidArgument, "architecture string spans lines");

    std::ostringstream h;
    h << kMagic << ' ' << kVersion << '\n'
      << "arch " << net.arch() << '\n'
      << "arch_digest " << hex64(fnv1a(net.arch())) << '\n'
      << "join " << to_string(o.join) << '\n'
      << "topology " << to_string(o.topology) << '\n'
      << "attention " << render_attention_plan(o.plan) << '\n'
      << "attention_options " << o.attention.temporal_reduction << ' ' << o.attention.channel_reduction << ' '
      << o.attention.spatial_kernel << '\n'
      << "lif " << format_double(o.lif.tau) << ' ' << format_double(o.lif.threshold) << ' '
      << format_double(o.lif.reset) << ' ' << format_double(o.lif.surrogate_alpha) << ' ' << (o.lif.detach_reset ? 1 : 0)
      << '\n'
      << "steps " << o.steps << '\n'
      << "input " << o.in_channels << ' ' << o.height << ' ' << o.width << '\n'
      << "seed " << o.seed << '\n'
      << "epoch " << meta.epoch << '\n'
      << "pruned " << (pruned.empty() ? "-" : pruned) << '\n'
      << "tensors " << all.size() << '\n'
      << "payload_digest " << hex64(fnv1a(payload)) << '\n'
      << "config_bytes " << meta.config.size() << '\n'
      << meta.config;
    return h.str() + payload;
}

LoadedCheckpoint decode_checkpoint(const std::string& bytes) {
    std::istringstream is(bytes);
    std::string first;
    if (!std::getline(is, first)) fail(ErrorKind::Truncated, "empty checkpoint");
    const auto parts = words(first);
    if (parts.size() != 2 || parts[0] != kMagic) fail(ErrorKind::BadMagic, "not a checkpoint (header '" + first.substr(0, 32) + "')");
    if (parts[1] != std::to_string(kVersion)) {
        fail(ErrorKind::VersionMismatch, "checkpoint version " + parts[1] + ", this build reads " + std::to_string(kVersion));
    }
    const std::string arch = field(is, "arch");
    const std::string digest = field(is, "arch_digest");
    if (digest != hex64(fnv1a(arch))) {
        fail(ErrorKind::ArchMismatch, "architecture string does not match its digest (edited checkpoint?)");
    }
    NetworkOptions o;
    o.join = parse_join_mode(field(is, "join"));
    o.topology = parse_block_topology(field(is, "topology"));
    o.plan = parse_attention_plan(field(is, "attention"));
    auto ao = words(field(is, "attention_options"));
    if (ao.size() != 3) fail(ErrorKind::CorruptPayload, "attention_options needs 3 values");
    o.attention.temporal_reduction = parse_size(ao[0], "attention_options");
    o.attention.channel_reduction = parse_size(ao[1], "attention_options");
    o.attention.spatial_kernel = parse_size(ao[2], "attention_options");
    auto lif = words(field(is, "lif"));
    if (lif.size() != 5) fail(ErrorKind::CorruptPayload, "lif needs 5 values");
    o.lif.tau = parse_double(lif[0], "lif tau");
    o.lif.threshold = parse_double(lif[1], "lif threshold");
    o.lif.reset = parse_double(lif[2], "lif reset");
    o.lif.surrogate_alpha = parse_double(lif[3], "lif alpha");
    o.lif.detach_reset = lif[4] == "1";
    o.steps = parse_size(field(is, "steps"), "steps");
    auto in = words(field(is, "input"));
    if (in.size() != 3) fail(ErrorKind::CorruptPayload, "input needs C H W");
    o.in_channels = parse_size(in[0], "input");
    o.height = parse_size(in[1], "input");
    o.width = parse_size(in[2], "input");
    o.seed = parse_size(field(is, "seed"), "seed");
    LoadedCheckpoint out;
    out.meta.epoch = parse_size(field(is, "epoch"), "epoch");
    const std::string pruned = field(is, "pruned");
    const std::size_t count = parse_size(field(is, "tensors"), "tensors");
    const std::string payload_digest = field(is, "payload_digest");
    const std::size_t config_bytes = parse_size(field(is, "config_bytes"), "config_bytes");

    const auto header_end = static_cast<std::size_t>(is.tellg());
    if (is.fail() || header_end + config_bytes > bytes.size()) fail(ErrorKind::Truncated, "checkpoint config section ends early");
    out.meta.config = bytes.substr(header_end, config_bytes);
    const std::string payload = bytes.substr(header_end + config_bytes);
    if (hex64(fnv1a(payload)) != payload_digest) fail(ErrorKind::CorruptPayload, "checkpoint payload digest mismatch");

    out.net = std::make_unique<Network<float>>(arch, o);
    if (pruned != "-") {
        std::stringstream ps(pruned);
        std::string name;
        while (std::getline(ps, name, ',')) out.net->block(name).prune();
    }
    auto all = slots(*out.net);
    if (all.size() != count) {
        fail(ErrorKind::ArchMismatch, "checkpoint holds " + std::to_string(count) + " tensors, the rebuilt graph has " +
                                          std::to_string(all.size()));
    }
    std::size_t pos = 0;
    for (auto& s : all) {
        const auto len = take<std::uint32_t>(payload, pos);
        if (pos + len > payload.size()) fail(ErrorKind::CorruptPayload, "checkpoint tensor name runs past the end");
        const std::string name = payload.substr(pos, len);
        pos += len;
        const auto n = take<std::uint64_t>(payload, pos);
        if (name != s.name || n != s.data.size()) {
            fail(ErrorKind::ArchMismatch, "checkpoint tensor '" + name + "' [" + std::to_string(n) + "] vs graph '" + s.name +
                                              "' [" + std::to_string(s.data.size()) + "]");
        }
        for (auto& v : s.data) v = take<float>(payload, pos);
    }
    if (pos != payload.size()) fail(ErrorKind::CorruptPayload, "trailing bytes after the last tensor");
    return out;
}

void save_checkpoint(Network<float>& net, const std::string& path, const CheckpointMeta& meta) {
    const std::string bytes = encode_checkpoint(net, meta);
    write_file(path, std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    const auto raw = read_file(path);
    return decode_checkpoint(std::string(raw.begin(), raw.end()));
}

}  // namespace orsnn
