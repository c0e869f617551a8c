#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "orsnn/io/events.hpp"
#include "orsnn/io/idx.hpp"
#include "orsnn/tensor/tensor.hpp"

namespace orsnn {

/// Batch transforms, applied per sample with draws from a seeded engine.
struct Transform {
    enum class Kind { Flip, Translate, Normalize };
    Kind kind = Kind::Flip;
    double a = 0.5;  // Flip: probability; Translate: max shift as a fraction of the extent; Normalize: mean
    double b = 0.0;  // Normalize: std

    std::string render() const;
    bool operator==(const Transform&) const = default;
};

/// Space-separated list such as "flip(0.5) translate(0.1) normalize(0.5,0.5)".
/// "flip" alone means p = 0.5. Empty or "none" gives no transforms.
std::vector<Transform> parse_transforms(const std::string& text);
std::string render_transforms(const std::vector<Transform>& transforms);

/// In-place plane operations on a row-major [H, W] image.
void flip_horizontal(float* plane, std::size_t h, std::size_t w);
void translate(float* plane, std::size_t h, std::size_t w, long dx, long dy);

/// Applies `transforms` to each of `n` samples of `planes` [H, W] planes.
/// Geometric transforms move all planes of a sample together.
void augment(std::vector<float>& batch, std::size_t n, std::size_t planes, std::size_t h, std::size_t w,
             const std::vector<Transform>& transforms, std::mt19937_64& rng);

/// Samples in memory: static images [C, H, W] or framed clips [T, C, H, W].
struct Dataset {
    std::string name;
    Shape sample_shape;
    bool temporal = false;
    std::vector<float> data;
    std::vector<std::int32_t> labels;

    std::size_t size() const { return labels.size(); }
    std::size_t sample_size() const { return numel(sample_shape); }
    std::size_t classes() const;
    std::size_t channels() const { return sample_shape[temporal ? 1 : 0]; }
    std::size_t height() const { return sample_shape[temporal ? 2 : 1]; }
    std::size_t width() const { return sample_shape[temporal ? 3 : 2]; }
    std::size_t steps() const { return temporal ? sample_shape[0] : 0; }

    static Dataset from_idx(const IdxDataset& idx, std::string name = "idx");
    static Dataset from_events(const FramedEventSet& events, std::string name = "events");
    /// Samples [first, first + count).
    Dataset slice(std::size_t first, std::size_t count) const;
};

/// Builds the network input [T, N, C, H, W] for the listed samples. Static
/// images are replicated T times; clips contribute their first T frames.
/// `transforms` run before encoding when `rng` is given.
Tensor<float> make_batch(const Dataset& data, const std::vector<std::size_t>& indices, std::size_t steps,
                         const std::vector<Transform>& transforms = {}, std::mt19937_64* rng = nullptr);

std::vector<std::int32_t> batch_labels(const Dataset& data, const std::vector<std::size_t>& indices);

}  // namespace orsnn
