#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace hypogen {

// ---------------------------------------------------------------------------
// Small string helpers shared by every module.

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
bool iequals(std::string_view a, std::string_view b);

// ---------------------------------------------------------------------------
// Tags

enum class SplitTag { train, validation, test_ind, test_ood };
enum class Provenance { literature, data, refined, zero_shot };

// Every distinct prompt shape the pipeline sends to a model. A task config
// binds each role it needs to a template id.
enum class AgentRole {
    summarizer,
    generator,
    literature_generator,
    joint_generator,
    zero_shot_generator,
    refiner_data,
    refiner_literature,
    inference,
    multi_inference,
    baseline,
    booster,
    redundancy_checker,
};

std::string_view to_string(SplitTag tag);
std::string_view to_string(Provenance provenance);
std::string_view to_string(AgentRole role);
SplitTag parse_split_tag(std::string_view text);
Provenance parse_provenance(std::string_view text);
AgentRole parse_agent_role(std::string_view text);
const std::vector<AgentRole>& all_agent_roles();

// ---------------------------------------------------------------------------
// Task and data

struct LabeledExample {
    std::string id;
    std::map<std::string, std::string> fields;
    std::string label;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct Dataset {
    std::vector<LabeledExample> examples;
    SplitTag split = SplitTag::train;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

struct TaskSpec {
    std::string task_id;
    std::string description;
    std::vector<std::string> label_set;
    std::vector<std::string> field_schema;
    std::map<AgentRole, std::string> template_bindings;
    // Template used to serialize one labeled example inside generation and
    // refinement prompts (placeholders: index, label, and the field names).
    std::string example_template;

    // Throws ConfigError when the label set or field schema is unusable.
    void validate() const;

    // Throws ConfigError naming the role when no template is bound.
    const std::string& template_for(AgentRole role) const;
    void require_roles(const std::vector<AgentRole>& roles) const;

    // Case-insensitive, whitespace-trimmed match against the label set.
    // Returns the task's own spelling.
    std::optional<std::string> canonical_label(std::string_view text) const;
};

// Returns the dataset unchanged when every example is well formed against
// the task; otherwise throws InputError naming the first offending example.
Dataset validate_dataset(Dataset dataset, const TaskSpec& task);

struct SplitSizes {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
};

struct DatasetSplits {
    Dataset train;
    Dataset validation;
    Dataset test;
};

// Seeded shuffle followed by a contiguous partition.
DatasetSplits split_dataset(const Dataset& dataset, SplitSizes sizes, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Hypotheses and rewards

struct Hypothesis {
    std::string id;
    std::string text;
    Provenance provenance = Provenance::data;
    std::uint64_t created_at_step = 0;

    friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

struct RewardState {
    std::uint64_t n_correct = 0;
    std::uint64_t n_seen = 0;

    void record(bool correct) {
        ++n_seen;
        if (correct) ++n_correct;
    }

    std::optional<double> training_accuracy() const {
        if (n_seen == 0) return std::nullopt;
        return static_cast<double>(n_correct) / static_cast<double>(n_seen);
    }

    bool valid() const { return n_correct <= n_seen; }

    friend bool operator==(const RewardState&, const RewardState&) = default;
};

struct BankEntry {
    Hypothesis hypothesis;
    RewardState reward;

    friend bool operator==(const BankEntry&, const BankEntry&) = default;
};

// Capacity-bounded collection with unique ids. Ordering is whatever the
// owner establishes; the engines keep it sorted by reward.
class HypothesisBank {
public:
    explicit HypothesisBank(std::size_t capacity = 20);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const std::vector<BankEntry>& entries() const { return entries_; }
    const BankEntry& operator[](std::size_t i) const { return entries_[i]; }
    const BankEntry* find(std::string_view id) const;

    // Throws PreconditionError on a duplicate id or when full.
    void add(BankEntry entry);
    void set_reward(std::size_t index, RewardState reward);
    void set_text(std::size_t index, std::string text);

    // Stable reorder by the given permutation of current indices.
    void reorder(const std::vector<std::size_t>& order);

    std::vector<std::string> texts() const;
    std::vector<std::string> ids() const;

    friend bool operator==(const HypothesisBank&, const HypothesisBank&) = default;

private:
    std::vector<BankEntry> entries_;
    std::size_t capacity_;
};

// ---------------------------------------------------------------------------
// Configuration

enum class RefineStart { data, literature };

struct EngineConfig {
    double alpha = 0.5;
    std::size_t k = 10;
    std::size_t w_max = 10;
    std::optional<std::size_t> w_hyp;  // unset: ceil(k / 2)
    std::size_t num_init = 10;
    std::size_t capacity = 20;
    std::size_t num_per_update = 10;
    std::optional<std::size_t> init_hypotheses;  // unset: capacity
    std::size_t refine_rounds = 6;
    RefineStart first_round = RefineStart::data;
    bool t_includes_init = true;
    double temperature = 1e-5;
    std::size_t max_tokens = 4000;
    std::uint64_t seed = 11376;
    std::optional<std::size_t> char_budget;  // unset: 4 * max_tokens
    std::size_t few_shot_count = 3;
    bool specificity_boost = false;
    std::size_t max_in_flight = 1;

    std::size_t effective_w_hyp() const { return w_hyp.value_or((k + 1) / 2); }
    std::size_t effective_init_hypotheses() const { return init_hypotheses.value_or(capacity); }
    std::size_t effective_char_budget() const { return char_budget.value_or(4 * max_tokens); }

    // Throws ConfigError on any violated range constraint.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Deterministic randomness. std::mt19937_64 is fully specified; the bounded
// draw is done here instead of through std::uniform_int_distribution, whose
// algorithm differs between standard libraries.

class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    // Uniform integer in [0, bound). bound must be nonzero.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace hypogen
