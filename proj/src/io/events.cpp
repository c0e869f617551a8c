#include "orsnn/io/events.hpp"

#include <algorithm>
#include <sstream>

#include "orsnn/error.hpp"
#include "orsnn/io/idx.hpp"
#include "orsnn/tensor/init.hpp"

namespace orsnn {

namespace {

constexpr const char* kMagic = "ORSNN-EVENTS 1";

}  // namespace

void FramedEventSet::validate() const {
    if (channels != 2) fail(ErrorKind::ShapeMismatch, "event frames need 2 polarity channels, got " + std::to_string(channels));
    if (labels.size() != count) {
        fail(ErrorKind::CountMismatch, std::to_string(count) + " event samples but " + std::to_string(labels.size()) +
                                           " labels");
    }
    if (frames.size() != count * sample_size()) {
        fail(ErrorKind::CountMismatch, "event payload holds " + std::to_string(frames.size()) + " elements, expected " +
                                           std::to_string(count * sample_size()));
    }
}

void save_events(const FramedEventSet& set, const std::string& path) {
    set.validate();
    std::ostringstream head;
    head << kMagic << '\n' << set.count << ' ' << set.steps << ' ' << set.channels << ' ' << set.height << ' '
         << set.width << '\n';
    const std::string h = head.str();
    std::vector<std::uint8_t> bytes(h.begin(), h.end());
    for (std::int32_t label : set.labels) {
        const auto u = static_cast<std::uint32_t>(label);
        for (int s = 0; s < 32; s += 8) bytes.push_back(static_cast<std::uint8_t>(u >> s));
    }
    bytes.insert(bytes.end(), set.frames.begin(), set.frames.end());
    write_file(path, bytes);
}

FramedEventSet load_events(const std::string& path) {
    const auto bytes = read_file(path);
    const std::string magic(kMagic);
    if (bytes.size() < magic.size() + 1 || !std::equal(magic.begin(), magic.end(), bytes.begin()) ||
        bytes[magic.size()] != '\n') {
        fail(ErrorKind::BadMagic, path + ": not an event container");
    }
    std::size_t pos = magic.size() + 1;
    const auto eol = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), std::uint8_t{'\n'});
    if (eol == bytes.end()) fail(ErrorKind::Truncated, path + ": missing extent header");
    std::istringstream extents(std::string(bytes.begin() + static_cast<std::ptrdiff_t>(pos), eol));
    FramedEventSet set;
    if (!(extents >> set.count >> set.steps >> set.channels >> set.height >> set.width)) {
        fail(ErrorKind::ParseError, path + ": malformed extent header");
    }
    pos = static_cast<std::size_t>(eol - bytes.begin()) + 1;
    const std::size_t need = pos + 4 * set.count + set.count * set.sample_size();
    if (bytes.size() < need) fail(ErrorKind::Truncated, path + ": payload shorter than its header declares");
    if (bytes.size() > need) fail(ErrorKind::Truncated, path + ": trailing bytes after the declared payload");
    set.labels.resize(set.count);
    for (std::size_t i = 0; i < set.count; ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= std::uint32_t{bytes[pos + 4 * i + static_cast<std::size_t>(b)]} << (8 * b);
        set.labels[i] = static_cast<std::int32_t>(u);
    }
    pos += 4 * set.count;
    set.frames.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    set.validate();
    return set;
}

SynthKind parse_synth_kind(const std::string& text) {
    if (text == "moving-bar") return SynthKind::MovingBar;
    if (text == "two-class-motion") return SynthKind::TwoClassMotion;
    fail(ErrorKind::ParseError, "unknown synthetic kind '" + text + "' (expected moving-bar or two-class-motion)");
}

std::string to_string(SynthKind kind) {
    return kind == SynthKind::MovingBar ? "moving-bar" : "two-class-motion";
}

namespace {

std::size_t wrap(long v, std::size_t n) {
    const long m = static_cast<long>(n);
    return static_cast<std::size_t>(((v % m) + m) % m);
}

std::size_t draw(std::mt19937_64& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

}  // namespace

FramedEventSet synth_events(SynthKind kind, std::size_t count, std::size_t steps, std::size_t height,
                            std::size_t width, std::uint64_t seed) {
    if (steps < 2) fail(ErrorKind::InvalidArgument, "synthetic motion needs T >= 2");
    if (height < 4 || width < 4) fail(ErrorKind::InvalidArgument, "synthetic frames must be at least 4x4");
    if (kind == SynthKind::TwoClassMotion && height != width) {
        fail(ErrorKind::InvalidArgument, "two-class-motion needs square frames");
    }
    std::mt19937_64 rng(seed);
    FramedEventSet set;
    set.count = count;
    set.steps = steps;
    set.height = height;
    set.width = width;
    set.frames.assign(count * set.sample_size(), 0);
    set.labels.resize(count);

    // Sample i belongs to pair i / 2 and class i % 2; both members of a pair
    // share every shape parameter. Pairs are grouped W at a time; a group
    // shares its vertical parameters and walks the start column over all W
    // positions.
    const std::size_t pairs = (count + 1) / 2;
    const std::size_t groups = (pairs + width - 1) / width;
    struct Group {
        std::size_t a = 0, b = 0;
    };
    std::vector<Group> group(groups);
    for (auto& g : group) {
        if (kind == SynthKind::MovingBar) {
            g.b = height / 3 + draw(rng, height - height / 3 + 1);  // bar length
            g.a = draw(rng, height - g.b + 1);                       // top row
        } else {
            g.a = draw(rng, height);  // row offset relative to the column
        }
    }
    const std::size_t plane = height * width;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t pair = i / 2;
        const std::int32_t label = static_cast<std::int32_t>(i % 2);
        const long dir = label == 0 ? 1 : -1;
        const Group& g = group[pair / width];
        const std::size_t x0 = pair % width;
        set.labels[i] = label;
        std::uint8_t* sample = set.frames.data() + i * set.sample_size();
        for (std::size_t t = 0; t < steps; ++t) {
            std::uint8_t* on = sample + t * 2 * plane;
            std::uint8_t* off = on + plane;
            const long shift = dir * static_cast<long>(t);
            if (kind == SynthKind::MovingBar) {
                const std::size_t x = wrap(static_cast<long>(x0) + shift, width);
                for (std::size_t y = g.a; y < g.a + g.b; ++y) {
                    on[y * width + x] = 1;
                    off[y * width + (width - 1 - x)] = 1;
                }
            } else {
                const std::size_t cx = wrap(static_cast<long>(x0) + shift, width);
                const std::size_t cy = wrap(static_cast<long>(x0 + g.a) + shift, height);
                for (long dy = -1; dy <= 1; ++dy) {
                    for (long dx = -1; dx <= 1; ++dx) {
                        const std::size_t y = wrap(static_cast<long>(cy) + dy, height);
                        const std::size_t x = wrap(static_cast<long>(cx) + dx, width);
                        on[y * width + x] = 1;
                        off[(height - 1 - y) * width + (width - 1 - x)] = 1;
                    }
                }
            }
        }
    }
    // Deterministic shuffle so batches mix classes.
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[draw(rng, i)]);
    FramedEventSet shuffled = set;
    for (std::size_t i = 0; i < count; ++i) {
        shuffled.labels[i] = set.labels[order[i]];
        std::copy_n(set.frames.begin() + static_cast<std::ptrdiff_t>(order[i] * set.sample_size()), set.sample_size(),
                    shuffled.frames.begin() + static_cast<std::ptrdiff_t>(i * set.sample_size()));
    }
    return shuffled;
}

std::vector<std::vector<std::uint32_t>> class_frame_histograms(const FramedEventSet& set, std::size_t classes) {
    set.validate();
    std::vector<std::vector<std::uint32_t>> hist(classes, std::vector<std::uint32_t>(set.sample_size(), 0));
    for (std::size_t i = 0; i < set.count; ++i) {
        const auto label = static_cast<std::size_t>(set.labels[i]);
        if (label >= classes) fail(ErrorKind::InvalidArgument, "label " + std::to_string(label) + " out of range");
        const std::uint8_t* sample = set.frames.data() + i * set.sample_size();
        for (std::size_t j = 0; j < set.sample_size(); ++j) hist[label][j] += sample[j] != 0;
    }
    return hist;
}

bool frame_histograms_equal(const FramedEventSet& set, std::size_t classes) {
    const auto hist = class_frame_histograms(set, classes);
    for (std::size_t c = 1; c < classes; ++c) {
        if (hist[c] != hist[0]) return false;
    }
    return true;
}

}  // namespace orsnn
