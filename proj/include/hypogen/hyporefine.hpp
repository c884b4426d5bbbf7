#pragma once

#include <string>
#include <vector>

#include "hypogen/hypogenic.hpp"
#include "hypogen/literature.hpp"

namespace hypogen {

enum class RefineContext { data, literature };

std::string_view to_string(RefineContext kind);

// Which context round i (1-based) uses. With the default data-first start,
// odd rounds are data-driven and even rounds literature-driven.
RefineContext context_for_round(std::size_t round, RefineStart first);

struct RefinementRound {
    std::size_t index = 0;
    RefineContext context = RefineContext::data;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

struct RefinementTrace {
    std::vector<RefinementRound> rounds;
    bool truncated = false;  // a round failed; later rounds were skipped
    std::string failure;
};

// Joint generation over summaries and init examples, then the same scoring
// as initialize_bank. Hypotheses carry refined provenance.
TrainingState initialize_joint(const std::vector<PaperSummary>& summaries, const Dataset& init,
                               const TaskContext& task, Gateway& gateway, const EngineConfig& config);

// One refinement call. Outputs take the ids and creation steps of the inputs
// by position; a short answer keeps only the leading inputs' identities.
std::vector<Hypothesis> refine_round(const std::vector<Hypothesis>& hyps, std::size_t round,
                                     const std::vector<PaperSummary>& summaries, const WrongExamplePool& pool,
                                     const TaskContext& task, Gateway& gateway, const EngineConfig& config);

struct RefinedBatch {
    std::vector<Hypothesis> hypotheses;
    RefinementTrace trace;
};

// Rounds 1..refine_rounds in sequence. A failed round stops the chain and
// the last successful output is returned with the trace flagged.
RefinedBatch refine_batch(const std::vector<Hypothesis>& hyps, const std::vector<PaperSummary>& summaries,
                          const WrongExamplePool& pool, const TaskContext& task, Gateway& gateway,
                          const EngineConfig& config);

struct RefinedTraining {
    TrainingState state;
    std::vector<RefinementTrace> traces;  // one per regeneration event
};

// run_training with joint initialization and every regenerated batch passed
// through refine_batch.
RefinedTraining run_training_refined(const Dataset& train, const std::vector<PaperSummary>& summaries,
                                     const TaskContext& task, Gateway& gateway, const EngineConfig& config,
                                     std::function<void(const TrainingState&)> observer = {});

}  // namespace hypogen
