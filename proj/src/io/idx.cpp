#include "orsnn/io/idx.hpp"

#include <fstream>
#include <iterator>

#include "orsnn/error.hpp"

namespace orsnn {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::DatasetNotFound, "cannot open " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "short write to " + path);
}

namespace {

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
           std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

void expect_size(const std::vector<std::uint8_t>& bytes, std::size_t expected, const std::string& path) {
    if (bytes.size() < expected) {
        fail(ErrorKind::Truncated, path + ": payload has " + std::to_string(bytes.size()) + " bytes, header promises " +
                                       std::to_string(expected));
    }
    if (bytes.size() > expected) {
        fail(ErrorKind::Truncated, path + ": " + std::to_string(bytes.size() - expected) +
                                       " bytes beyond the declared payload");
    }
}

}  // namespace

IdxDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_file(images_path);
    const auto lab = read_file(labels_path);

    if (img.size() < 16) fail(ErrorKind::Truncated, images_path + ": header shorter than 16 bytes");
    if (be32(img, 0) != kIdxImageMagic) fail(ErrorKind::BadMagic, images_path + ": not an IDX image file (magic)");
    if (lab.size() < 8) fail(ErrorKind::Truncated, labels_path + ": header shorter than 8 bytes");
    if (be32(lab, 0) != kIdxLabelMagic) fail(ErrorKind::BadMagic, labels_path + ": not an IDX label file (magic)");

    IdxDataset ds;
    ds.count = be32(img, 4);
    ds.height = be32(img, 8);
    ds.width = be32(img, 12);
    const std::size_t label_count = be32(lab, 4);
    if (label_count != ds.count) {
        fail(ErrorKind::CountMismatch, images_path + " has " + std::to_string(ds.count) + " images but " + labels_path +
                                           " has " + std::to_string(label_count) + " labels");
    }
    const std::size_t pixels = ds.count * ds.height * ds.width;
    expect_size(img, 16 + pixels, images_path);
    expect_size(lab, 8 + ds.count, labels_path);

    ds.images.resize(pixels);
    for (std::size_t i = 0; i < pixels; ++i) ds.images[i] = static_cast<float>(img[16 + i]) / 255.0f;
    ds.labels.resize(ds.count);
    for (std::size_t i = 0; i < ds.count; ++i) ds.labels[i] = lab[8 + i];
    return ds;
}

void write_idx(const std::string& images_path, const std::string& labels_path, std::size_t height, std::size_t width,
               const std::vector<std::uint8_t>& pixels, const std::vector<std::uint8_t>& labels) {
    if (pixels.size() != labels.size() * height * width) {
        fail(ErrorKind::CountMismatch, "write_idx: " + std::to_string(pixels.size()) + " pixels for " +
                                           std::to_string(labels.size()) + " labels");
    }
    std::vector<std::uint8_t> img;
    put_be32(img, kIdxImageMagic);
    put_be32(img, static_cast<std::uint32_t>(labels.size()));
    put_be32(img, static_cast<std::uint32_t>(height));
    put_be32(img, static_cast<std::uint32_t>(width));
    img.insert(img.end(), pixels.begin(), pixels.end());
    std::vector<std::uint8_t> lab;
    put_be32(lab, kIdxLabelMagic);
    put_be32(lab, static_cast<std::uint32_t>(labels.size()));
    lab.insert(lab.end(), labels.begin(), labels.end());
    write_file(images_path, img);
    write_file(labels_path, lab);
}

}  // namespace orsnn
