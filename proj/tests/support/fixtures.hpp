#pragma once

#include <filesystem>
#include <string>

#include "hypogen/run_config.hpp"

namespace hypogen::testing {

inline std::filesystem::path data_dir() { return HYPOGEN_DATA_DIR; }
inline std::filesystem::path test_data_dir() { return HYPOGEN_TEST_DATA_DIR; }

inline RunConfig load_task(const std::string& name) {
    return load_run_config(data_dir() / "tasks" / name / "task.yaml");
}

inline LabeledExample text_example(std::string id, std::string text, std::string label) {
    return LabeledExample{std::move(id), {{"text", std::move(text)}}, std::move(label)};
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("hypogen-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace hypogen::testing
