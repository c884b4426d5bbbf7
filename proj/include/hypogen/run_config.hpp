#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypogen/agents.hpp"
#include "hypogen/core.hpp"
#include "hypogen/gateway.hpp"
#include "json.hpp"

namespace hypogen {

struct BackendSpec {
    std::string name;
    std::string kind;  // "openai" or "mock"
    std::string model_id;
    HttpBackendConfig http;
    MockBackendConfig mock;
};

// Everything a command needs from one task config file.
struct RunConfig {
    std::filesystem::path source;
    TaskContext task;
    EngineConfig engine;
    std::vector<BackendSpec> backends;
    std::string default_backend;
    std::vector<std::uint64_t> seeds{11376, 8271, 39660, 543, 3};
    std::filesystem::path template_path;

    // Throws ConfigError for an unknown name; an empty name picks the default.
    const BackendSpec& backend(const std::string& name) const;
};

// YAML task config. Relative paths inside resolve against the file's
// directory. Throws ConfigError on any structural problem.
RunConfig load_run_config(const std::filesystem::path& path);

struct EngineOverrides {
    std::optional<double> alpha;
    std::optional<std::size_t> k;
    std::optional<std::size_t> w_max;
    std::optional<std::size_t> w_hyp;
    std::optional<std::size_t> num_init;
    std::optional<std::size_t> max_hypotheses;
    std::optional<std::size_t> refine_rounds;
    std::optional<std::uint64_t> seed;
};

// Applies overrides and re-validates.
void apply_overrides(EngineConfig& config, const EngineOverrides& overrides);

std::shared_ptr<Transport> make_transport(const BackendSpec& backend);

nlohmann::ordered_json engine_to_json(const EngineConfig& config);
EngineConfig engine_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json task_to_json(const TaskSpec& task);

}  // namespace hypogen
