#pragma once

#include <filesystem>

#include "ntfa/data.hpp"

namespace ntfa::io {

/// Writes `dir/manifest.json`, `dir/grid.ntfa` and one matrix file per trial
/// under `dir/trials/`.  Values are stored as 32-bit floats.
void save_dataset(const std::filesystem::path& dir, const StudyDataset& dataset);

/// Reads a dataset written by save_dataset.  Throws FormatError for a
/// missing or malformed manifest or matrix file.
StudyDataset load_dataset(const std::filesystem::path& dir);

}  // namespace ntfa::io
