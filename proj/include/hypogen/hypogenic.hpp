#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hypogen/agents.hpp"
#include "hypogen/core.hpp"
#include "hypogen/gateway.hpp"

namespace hypogen {

// acc + alpha * sqrt(ln(t) / n_seen). Throws PreconditionError when
// n_seen == 0 or t == 0.
double compute_reward(const RewardState& state, std::uint64_t t, double alpha);

// Examples that most of the consulted hypotheses got wrong.
class WrongExamplePool {
public:
    explicit WrongExamplePool(std::size_t capacity = 10) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return examples_.size(); }
    bool empty() const { return examples_.empty(); }
    bool full() const { return examples_.size() >= capacity_; }
    bool contains(const std::string& id) const;
    const std::vector<LabeledExample>& examples() const { return examples_; }

    // Throws PreconditionError when full or when the id is already pooled.
    void add(LabeledExample example);
    void clear() { examples_.clear(); }

    friend bool operator==(const WrongExamplePool&, const WrongExamplePool&) = default;

private:
    std::vector<LabeledExample> examples_;
    std::size_t capacity_;
};

struct StepReport {
    std::string example_id;
    std::vector<std::string> consulted_ids;
    std::size_t wrong_count = 0;
    bool entered_pool = false;
    bool regenerated = false;
    bool regeneration_failed = false;
    std::vector<std::string> new_ids;
};

struct TrainingState {
    HypothesisBank bank;
    WrongExamplePool wrong_pool;
    std::uint64_t t = 0;             // time used by the reward
    std::uint64_t update_steps = 0;  // examples consumed after initialization
    std::uint64_t next_id = 1;       // counter behind fresh hypothesis ids
    EngineConfig config;
    StepReport last_step;
};

// Sorts by reward at max(t, 1), descending; ties go to the earlier
// created_at_step, then the smaller id. Entries never tried rank first.
void sort_bank_by_reward(HypothesisBank& bank, std::uint64_t t, double alpha);

struct SinglePrediction {
    std::optional<std::string> predicted;  // empty when the answer did not parse
    bool correct = false;
    std::string raw_text;
};

// Single-hypothesis inference. An unparseable answer is logged and counts as
// wrong.
SinglePrediction evaluate_hypothesis_on_example(const Hypothesis& hypothesis, const LabeledExample& example,
                                                const TaskContext& task, Gateway& gateway, const EngineConfig& config);

// Builds a state from freshly generated texts: every hypothesis is tried on
// every init example, t starts at |init| (or 0 when t excludes init), and the
// bank is sorted and capped to capacity.
TrainingState seed_training_state(const std::vector<std::string>& texts, Provenance provenance, const Dataset& init,
                                  const TaskContext& task, Gateway& gateway, const EngineConfig& config);

// One generation call over the init examples, then seed_training_state.
// Requires |init| == num_init.
TrainingState initialize_bank(const Dataset& init, const TaskContext& task, Gateway& gateway,
                              const EngineConfig& config);

// Post-processing applied to every regenerated batch before it is scored.
using RegenerationHook =
    std::function<std::vector<Hypothesis>(std::vector<Hypothesis> batch, const WrongExamplePool& pool)>;

// One generation call over the pool. A parse failure after the retry yields
// an empty list (logged). New hypotheses carry ids from state.next_id.
std::vector<Hypothesis> generate_from_wrong(const WrongExamplePool& pool, TrainingState& state,
                                            const TaskContext& task, Gateway& gateway);

// Tries each hypothesis on every pool example. Reward states come back in
// input order.
std::vector<RewardState> score_on_examples(const std::vector<Hypothesis>& hypotheses,
                                           const std::vector<LabeledExample>& examples, const TaskContext& task,
                                           Gateway& gateway, const EngineConfig& config);

// generate_from_wrong followed by scoring on the pool.
std::vector<BankEntry> regenerate_from_wrong(const WrongExamplePool& pool, TrainingState& state,
                                             const TaskContext& task, Gateway& gateway,
                                             const RegenerationHook& hook = {});

// Consumes one example. Returns the next state; on error the input state is
// untouched.
TrainingState update_step(const TrainingState& state, const LabeledExample& example, const TaskContext& task,
                          Gateway& gateway, const RegenerationHook& hook = {});

struct TrainingOptions {
    // Replaces initialize_bank (HypoRefine plugs in joint initialization).
    std::function<TrainingState(const Dataset& init)> initializer;
    RegenerationHook hook;
    // Called after initialization and after every update step.
    std::function<void(const TrainingState&)> observer;
};

// Initialization on the first num_init examples, then update_step over the
// rest in order. Errors are rethrown with the step reached.
TrainingState run_training(const Dataset& train, const TaskContext& task, Gateway& gateway,
                           const EngineConfig& config, const TrainingOptions& options = {});

}  // namespace hypogen
