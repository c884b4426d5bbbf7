#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypogen/agents.hpp"
#include "hypogen/core.hpp"
#include "hypogen/gateway.hpp"

namespace hypogen {

struct Prediction {
    std::uint64_t seed = 0;
    std::string example_id;
    std::string gold;
    std::optional<std::string> predicted;  // set iff parse_ok
    bool parse_ok = false;
    std::string raw_text;

    bool correct() const { return parse_ok && predicted && *predicted == gold; }
};

struct ClassMetrics {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct SeedMetrics {
    std::uint64_t seed = 0;
    std::size_t n = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<ClassMetrics> per_class;
    std::size_t parse_failures = 0;
};

struct MetricsReport {
    std::string method;
    std::string generation_backend;
    std::string inference_backend;
    std::vector<SeedMetrics> per_seed;
    double mean_accuracy = 0.0;
    double mean_macro_f1 = 0.0;
    std::vector<Prediction> predictions;
};

// Accuracy and macro-F1 over `label_set`. A missing prediction counts as
// wrong and as a prediction for no class. Classes with an empty F1
// denominator score 0.
SeedMetrics compute_metrics(const std::vector<std::string>& gold,
                            const std::vector<std::optional<std::string>>& predicted,
                            const std::vector<std::string>& label_set);

// The whole bank, numbered in stored order, in one inference prompt.
Prediction infer_multi(const HypothesisBank& bank, const LabeledExample& example, const TaskContext& task,
                       Gateway& gateway, const EngineConfig& config);

// No-hypothesis baseline. `shots` is empty (zero-shot) or exactly
// config.few_shot_count demonstrations.
Prediction infer_baseline(const LabeledExample& example, const TaskContext& task,
                          std::span<const LabeledExample> shots, Gateway& gateway, const EngineConfig& config);

// Hypotheses from the task description alone.
HypothesisBank zero_shot_generate(const TaskContext& task, std::size_t n, Gateway& gateway,
                                  const EngineConfig& config);

// What evaluate runs on each example.
struct InferenceMethod {
    enum class Kind { hypotheses, zero_shot_baseline, few_shot_baseline };

    Kind kind = Kind::hypotheses;
    const HypothesisBank* bank = nullptr;  // for Kind::hypotheses
    const Dataset* shot_pool = nullptr;    // for Kind::few_shot_baseline

    static InferenceMethod with_bank(const HypothesisBank& b) { return {Kind::hypotheses, &b, nullptr}; }
    static InferenceMethod zero_shot() { return {Kind::zero_shot_baseline, nullptr, nullptr}; }
    static InferenceMethod few_shot(const Dataset& pool) { return {Kind::few_shot_baseline, nullptr, &pool}; }
};

std::string_view to_string(InferenceMethod::Kind kind);

// Seeded choice of config.few_shot_count demonstrations from the pool.
std::vector<LabeledExample> sample_shots(const Dataset& pool, std::size_t count, std::uint64_t seed);

// One pass over the test set per seed; predictions are kept in test order.
MetricsReport evaluate(const InferenceMethod& method, const Dataset& test, const TaskContext& task, Gateway& gateway,
                       const EngineConfig& config, const std::vector<std::uint64_t>& seeds);

// evaluate with every inference call sent to `inference_gateway`; the
// report names both backends.
MetricsReport cross_model_evaluate(const HypothesisBank& bank, const std::string& generation_backend,
                                   Gateway& inference_gateway, const Dataset& test, const TaskContext& task,
                                   const EngineConfig& config, const std::vector<std::uint64_t>& seeds);

}  // namespace hypogen
