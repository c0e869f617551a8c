#pragma once

#include <string>
#include <utility>

#include "orsnn/io/config.hpp"

namespace orsnn {

/// Train and test sets described by a data config, limits applied.
/// Synthetic sets use `seed` for training and `seed + 1` for testing.
std::pair<Dataset, Dataset> load_datasets(const DataConfig& data, std::uint64_t seed);

/// A dataset from one path: a directory holding images-idx3-ubyte and
/// labels-idx1-ubyte, or an event container file.
Dataset load_data_path(const std::string& path);

}  // namespace orsnn
