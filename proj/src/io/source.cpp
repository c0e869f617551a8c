#include "orsnn/io/source.hpp"

#include <filesystem>

#include "orsnn/io/events.hpp"
#include "orsnn/io/idx.hpp"

namespace orsnn {

namespace {

Dataset limited(Dataset d, std::size_t limit) {
    if (limit == 0 || limit >= d.size()) return d;
    return d.slice(0, limit);
}

void require(const std::string& path, const std::string& key) {
    if (path.empty()) fail(ErrorKind::DatasetNotFound, "[data] " + key + " is not set");
}

}  // namespace

std::pair<Dataset, Dataset> load_datasets(const DataConfig& data, std::uint64_t seed) {
    Dataset train, test;
    if (data.kind == "idx") {
        require(data.train_images, "train_images");
        require(data.train_labels, "train_labels");
        require(data.test_images, "test_images");
        require(data.test_labels, "test_labels");
        train = Dataset::from_idx(load_idx(data.train_images, data.train_labels), data.train_images);
        test = Dataset::from_idx(load_idx(data.test_images, data.test_labels), data.test_images);
    } else if (data.kind == "events") {
        require(data.train_events, "train_events");
        require(data.test_events, "test_events");
        train = Dataset::from_events(load_events(data.train_events), data.train_events);
        test = Dataset::from_events(load_events(data.test_events), data.test_events);
    } else if (data.kind == "synthetic") {
        const SynthKind kind = parse_synth_kind(data.synth_kind);
        train = Dataset::from_events(
            synth_events(kind, data.synth_train, data.synth_steps, data.synth_size, data.synth_size, seed), "synthetic-train");
        test = Dataset::from_events(
            synth_events(kind, data.synth_test, data.synth_steps, data.synth_size, data.synth_size, seed + 1), "synthetic-test");
    } else {
        fail(ErrorKind::InvalidArgument, "unknown data kind '" + data.kind + "'");
    }
    return {limited(std::move(train), data.limit_train), limited(std::move(test), data.limit_test)};
}

Dataset load_data_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) fail(ErrorKind::DatasetNotFound, "no such dataset: " + path);
    if (fs::is_directory(path)) {
        const fs::path dir(path);
        return Dataset::from_idx(load_idx((dir / "images-idx3-ubyte").string(), (dir / "labels-idx1-ubyte").string()), path);
    }
    return Dataset::from_events(load_events(path), path);
}

}  // namespace orsnn
