#include "orsnn/io/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "orsnn/io/text.hpp"
#include "orsnn/tensor/init.hpp"

namespace orsnn {

std::string Transform::render() const {
    switch (kind) {
        case Kind::Flip: return "flip(" + format_double(a) + ")";
        case Kind::Translate: return "translate(" + format_double(a) + ")";
        case Kind::Normalize: return "normalize(" + format_double(a) + "," + format_double(b) + ")";
    }
    return "?";
}

namespace {

std::vector<double> arguments(const std::string& token, std::size_t open) {
    std::vector<double> out;
    if (open == std::string::npos) return out;
    if (token.back() != ')') fail(ErrorKind::ParseError, "transform '" + token + "' lacks a closing parenthesis");
    std::stringstream ss(token.substr(open + 1, token.size() - open - 2));
    std::string part;
    while (std::getline(ss, part, ',')) {
        out.push_back(parse_double(part, "transform '" + token + "'"));
    }
    return out;
}

}  // namespace

std::vector<Transform> parse_transforms(const std::string& text) {
    std::vector<Transform> out;
    std::istringstream is(text);
    std::string token;
    while (is >> token) {
        if (token == "none") continue;
        const auto open = token.find('(');
        const std::string name = token.substr(0, open);
        const auto args = arguments(token, open);
        Transform t;
        if (name == "flip") {
            t.kind = Transform::Kind::Flip;
            if (args.size() > 1) fail(ErrorKind::ParseError, "flip takes one probability");
            t.a = args.empty() ? 0.5 : args[0];
            if (t.a < 0 || t.a > 1) fail(ErrorKind::ParseError, "flip probability must lie in [0, 1]");
        } else if (name == "translate") {
            t.kind = Transform::Kind::Translate;
            if (args.size() != 1 || args[0] < 0 || args[0] > 1) {
                fail(ErrorKind::ParseError, "translate takes one fraction in [0, 1]");
            }
            t.a = args[0];
        } else if (name == "normalize") {
            t.kind = Transform::Kind::Normalize;
            if (args.size() != 2 || !(args[1] > 0)) fail(ErrorKind::ParseError, "normalize takes (mean, std > 0)");
            t.a = args[0];
            t.b = args[1];
        } else {
            fail(ErrorKind::ParseError, "unknown transform '" + name + "'");
        }
        out.push_back(t);
    }
    return out;
}

std::string render_transforms(const std::vector<Transform>& transforms) {
    if (transforms.empty()) return "none";
    std::string out;
    for (const auto& t : transforms) {
        if (!out.empty()) out += ' ';
        out += t.render();
    }
    return out;
}

void flip_horizontal(float* plane, std::size_t h, std::size_t w) {
    for (std::size_t y = 0; y < h; ++y) std::reverse(plane + y * w, plane + (y + 1) * w);
}

void translate(float* plane, std::size_t h, std::size_t w, long dx, long dy) {
    if (dx == 0 && dy == 0) return;
    std::vector<float> src(plane, plane + h * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const long sy = static_cast<long>(y) - dy, sx = static_cast<long>(x) - dx;
            const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<long>(h) && sx < static_cast<long>(w);
            plane[y * w + x] = inside ? src[static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)] : 0.0f;
        }
    }
}

void augment(std::vector<float>& batch, std::size_t n, std::size_t planes, std::size_t h, std::size_t w,
             const std::vector<Transform>& transforms, std::mt19937_64& rng) {
    const std::size_t plane = h * w;
    if (batch.size() != n * planes * plane) fail(ErrorKind::ShapeMismatch, "augment: buffer size does not match");
    for (std::size_t i = 0; i < n; ++i) {
        float* sample = batch.data() + i * planes * plane;
        for (const auto& t : transforms) {
            switch (t.kind) {
                case Transform::Kind::Flip:
                    if (uniform01(rng) < t.a) {
                        for (std::size_t p = 0; p < planes; ++p) flip_horizontal(sample + p * plane, h, w);
                    }
                    break;
                case Transform::Kind::Translate: {
                    const long mx = static_cast<long>(std::floor(t.a * static_cast<double>(w)));
                    const long my = static_cast<long>(std::floor(t.a * static_cast<double>(h)));
                    const long dx = static_cast<long>(std::floor(uniform01(rng) * static_cast<double>(2 * mx + 1))) - mx;
                    const long dy = static_cast<long>(std::floor(uniform01(rng) * static_cast<double>(2 * my + 1))) - my;
                    for (std::size_t p = 0; p < planes; ++p) translate(sample + p * plane, h, w, dx, dy);
                    break;
                }
                case Transform::Kind::Normalize:
                    for (std::size_t j = 0; j < planes * plane; ++j) {
                        sample[j] = static_cast<float>((sample[j] - t.a) / t.b);
                    }
                    break;
            }
        }
    }
}

std::size_t Dataset::classes() const {
    std::int32_t top = -1;
    for (auto l : labels) top = std::max(top, l);
    return static_cast<std::size_t>(top + 1);
}

Dataset Dataset::from_idx(const IdxDataset& idx, std::string name) {
    Dataset d;
    d.name = std::move(name);
    d.sample_shape = {1, idx.height, idx.width};
    d.data = idx.images;
    d.labels = idx.labels;
    return d;
}

Dataset Dataset::from_events(const FramedEventSet& events, std::string name) {
    events.validate();
    Dataset d;
    d.name = std::move(name);
    d.temporal = true;
    d.sample_shape = {events.steps, events.channels, events.height, events.width};
    d.data.assign(events.frames.begin(), events.frames.end());
    d.labels = events.labels;
    return d;
}

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
    if (first + count > size()) {
        fail(ErrorKind::InvalidArgument, "slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                                             ") exceeds " + std::to_string(size()) + " samples");
    }
    Dataset d;
    d.name = name;
    d.sample_shape = sample_shape;
    d.temporal = temporal;
    const auto s = static_cast<std::ptrdiff_t>(sample_size());
    d.data.assign(data.begin() + static_cast<std::ptrdiff_t>(first) * s,
                  data.begin() + static_cast<std::ptrdiff_t>(first + count) * s);
    d.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(first),
                    labels.begin() + static_cast<std::ptrdiff_t>(first + count));
    return d;
}

Tensor<float> make_batch(const Dataset& data, const std::vector<std::size_t>& indices, std::size_t steps,
                         const std::vector<Transform>& transforms, std::mt19937_64* rng) {
    if (indices.empty()) fail(ErrorKind::EmptyDataset, "empty batch from " + data.name);
    if (steps == 0) fail(ErrorKind::InvalidArgument, "T must be >= 1");
    const std::size_t n = indices.size(), ss = data.sample_size();
    std::vector<float> raw(n * ss);
    for (std::size_t i = 0; i < n; ++i) {
        if (indices[i] >= data.size()) fail(ErrorKind::InvalidArgument, "sample index out of range");
        std::copy_n(data.data.begin() + static_cast<std::ptrdiff_t>(indices[i] * ss), ss,
                    raw.begin() + static_cast<std::ptrdiff_t>(i * ss));
    }
    const std::size_t c = data.channels(), h = data.height(), w = data.width();
    if (rng != nullptr && !transforms.empty()) augment(raw, n, ss / (h * w), h, w, transforms, *rng);
    if (!data.temporal) {
        Shape s{steps, n, c, h, w};
        std::vector<float> v;
        v.reserve(steps * raw.size());
        for (std::size_t t = 0; t < steps; ++t) v.insert(v.end(), raw.begin(), raw.end());
        return Tensor<float>(std::move(s), std::move(v));
    }
    if (steps > data.steps()) {
        fail(ErrorKind::ShapeMismatch, "requested T=" + std::to_string(steps) + " but clips hold " +
                                           std::to_string(data.steps()) + " frames");
    }
    const std::size_t frame = c * h * w;
    std::vector<float> v(steps * n * frame);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            std::copy_n(raw.begin() + static_cast<std::ptrdiff_t>(i * ss + t * frame), frame,
                        v.begin() + static_cast<std::ptrdiff_t>((t * n + i) * frame));
        }
    }
    return Tensor<float>({steps, n, c, h, w}, std::move(v));
}

std::vector<std::int32_t> batch_labels(const Dataset& data, const std::vector<std::size_t>& indices) {
    std::vector<std::int32_t> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(data.labels.at(i));
    return out;
}

}  // namespace orsnn
