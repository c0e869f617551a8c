#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace orsnn {

/// Grayscale images [N, 1, H, W] scaled to [0, 1] with class labels.
struct IdxDataset {
    std::size_t count = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> images;
    std::vector<std::int32_t> labels;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads an IDX image file and label file (big-endian headers, unsigned
/// byte payloads). Errors: DatasetNotFound, BadMagic, Truncated (short
/// header or payload, or trailing bytes), CountMismatch.
IdxDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Writes raw IDX files; pixels are given as bytes.
void write_idx(const std::string& images_path, const std::string& labels_path, std::size_t height, std::size_t width,
               const std::vector<std::uint8_t>& pixels, const std::vector<std::uint8_t>& labels);

/// Reads a whole file; DatasetNotFound when it cannot be opened.
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace orsnn
