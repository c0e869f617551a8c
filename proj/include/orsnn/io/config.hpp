#pragma once

#include <optional>
#include <string>

#include "orsnn/net/train.hpp"

namespace orsnn {

/// Where samples come from.
///   kind = idx        train_images/train_labels/test_images/test_labels
///   kind = events     train_events/test_events (event containers)
///   kind = synthetic  generated clips (synth_* keys)
/// limit_train / limit_test keep only the first n samples (0 = all).
struct DataConfig {
    std::string kind = "idx";
    std::string train_images, train_labels, test_images, test_labels;
    std::string train_events, test_events;
    std::string synth_kind = "moving-bar";
    std::size_t synth_train = 512;
    std::size_t synth_test = 1024;
    std::size_t synth_steps = 8;
    std::size_t synth_size = 16;
    std::size_t limit_train = 0;
    std::size_t limit_test = 0;

    bool operator==(const DataConfig&) const = default;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::string dataset = "mnist";
    std::string arch;
    std::string out = "runs/experiment";
    JoinMode join = JoinMode::Or;
    BlockTopology topology = BlockTopology::OrSew;
    std::optional<AttentionPlan> plan;
    LifConfig lif;
    AttentionOptions attention;
    TrainConfig train;  // train.seed also seeds parameter initialization
    DataConfig data;

    bool operator==(const ExperimentConfig&) const = default;
};

/// INI-style text:
///   # comment
///   [experiment]  name dataset arch join topology attention seed out
///   [lif]         tau threshold reset alpha detach_reset
///   [train]       lr steps batch epochs optimizer loss augment patience
///   [data]        kind train_images ... limit_test
///   [attention]   temporal_reduction channel_reduction spatial_kernel
/// One "key = value" per line; whitespace around '=' is ignored. Keys left
/// out keep their defaults, where [train] defaults follow the dataset.
/// `arch = preset:<dataset>` names a reference architecture.
ExperimentConfig parse_config(const std::string& text);
std::string render_config(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

NetworkOptions network_options(const ExperimentConfig& config, std::size_t in_channels, std::size_t height,
                               std::size_t width);

}  // namespace orsnn
