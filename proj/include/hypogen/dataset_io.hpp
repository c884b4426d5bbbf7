#pragma once

#include <filesystem>
#include <optional>

#include "hypogen/core.hpp"

namespace hypogen {

// Reads a dataset file: one JSON object per line with `id`, `fields`
// (field-name -> text), `label`, and an optional `split` tag. All records
// in a file must agree on the split; `expected` is used when none is given
// and must match when one is. The result is validated against the task.
Dataset load_dataset(const std::filesystem::path& path, const TaskSpec& task,
                     std::optional<SplitTag> expected = std::nullopt);

// Writes one record per line, each carrying the dataset's split tag.
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace hypogen
