#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace orsnn {

/// Pre-framed event tensors [N, T, 2, H, W], one byte per element (binary or
/// small counts), with class labels.
struct FramedEventSet {
    std::size_t count = 0;
    std::size_t steps = 0;
    std::size_t channels = 2;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> frames;
    std::vector<std::int32_t> labels;

    std::size_t sample_size() const { return steps * channels * height * width; }
    void validate() const;
    bool operator==(const FramedEventSet&) const = default;
};

/// Container layout:
///   "ORSNN-EVENTS 1\n"
///   "<N> <T> <C> <H> <W>\n"
///   N little-endian int32 labels, then N*T*C*H*W bytes.
void save_events(const FramedEventSet& set, const std::string& path);
FramedEventSet load_events(const std::string& path);

enum class SynthKind { MovingBar, TwoClassMotion };

SynthKind parse_synth_kind(const std::string& text);
std::string to_string(SynthKind kind);

/// Binary motion clips where the class is carried only by the direction of
/// motion (class 0: +1 px per step, class 1: -1 px per step, with
/// wrap-around).
///   MovingBar       a vertical bar segment in channel 0 and its horizontal
///                   mirror in channel 1
///   TwoClassMotion  a 3x3 square moving diagonally in channel 0 and its
///                   point reflection in channel 1 (requires H == W)
/// Start positions are stratified over every column, so when each class
/// holds a multiple of W samples the per-frame, per-pixel occupancy of the
/// two classes is identical and a single frame carries no class signal.
FramedEventSet synth_events(SynthKind kind, std::size_t count, std::size_t steps, std::size_t height,
                            std::size_t width, std::uint64_t seed);

/// Per-frame class-conditional occupancy counts [classes][T][C][H][W].
std::vector<std::vector<std::uint32_t>> class_frame_histograms(const FramedEventSet& set, std::size_t classes);

/// True when every class has the same occupancy histogram at every step.
bool frame_histograms_equal(const FramedEventSet& set, std::size_t classes);

}  // namespace orsnn
