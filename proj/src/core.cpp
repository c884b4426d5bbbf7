#include "hypogen/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <set>
#include <utility>

#include "hypogen/error.hpp"

namespace hypogen {

std::string trim(std::string_view text) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

namespace {

constexpr std::array<std::pair<AgentRole, std::string_view>, 12> kRoleNames{{
    {AgentRole::summarizer, "summarizer"},
    {AgentRole::generator, "generator"},
    {AgentRole::literature_generator, "literature-generator"},
    {AgentRole::joint_generator, "joint-generator"},
    {AgentRole::zero_shot_generator, "zero-shot-generator"},
    {AgentRole::refiner_data, "refiner-data"},
    {AgentRole::refiner_literature, "refiner-literature"},
    {AgentRole::inference, "inference"},
    {AgentRole::multi_inference, "multi-inference"},
    {AgentRole::baseline, "baseline"},
    {AgentRole::booster, "booster"},
    {AgentRole::redundancy_checker, "redundancy-checker"},
}};

}  // namespace

std::string_view to_string(SplitTag tag) {
    switch (tag) {
        case SplitTag::train: return "train";
        case SplitTag::validation: return "validation";
        case SplitTag::test_ind: return "test-IND";
        case SplitTag::test_ood: return "test-OOD";
    }
    return "train";
}

std::string_view to_string(Provenance provenance) {
    switch (provenance) {
        case Provenance::literature: return "literature";
        case Provenance::data: return "data";
        case Provenance::refined: return "refined";
        case Provenance::zero_shot: return "zero-shot";
    }
    return "data";
}

std::string_view to_string(AgentRole role) {
    for (const auto& [r, name] : kRoleNames)
        if (r == role) return name;
    return "unknown";
}

SplitTag parse_split_tag(std::string_view text) {
    for (SplitTag tag :
         {SplitTag::train, SplitTag::validation, SplitTag::test_ind, SplitTag::test_ood}) {
        if (iequals(to_string(tag), text)) return tag;
    }
    throw InputError("unknown split tag '" + std::string(text) + "'");
}

Provenance parse_provenance(std::string_view text) {
    for (Provenance p : {Provenance::literature, Provenance::data, Provenance::refined,
                         Provenance::zero_shot}) {
        if (to_string(p) == text) return p;
    }
    throw InputError("unknown provenance '" + std::string(text) + "'");
}

AgentRole parse_agent_role(std::string_view text) {
    for (const auto& [r, name] : kRoleNames)
        if (name == text) return r;
    throw ConfigError("unknown agent role '" + std::string(text) + "'");
}

const std::vector<AgentRole>& all_agent_roles() {
    static const std::vector<AgentRole> roles = [] {
        std::vector<AgentRole> out;
        for (const auto& [r, name] : kRoleNames) out.push_back(r);
        return out;
    }();
    return roles;
}

// ---------------------------------------------------------------------------

void TaskSpec::validate() const {
    if (task_id.empty()) throw ConfigError("task_id is empty");
    if (label_set.size() < 2) throw ConfigError("label_set needs at least 2 labels");
    std::set<std::string> seen;
    for (const auto& label : label_set) {
        if (trim(label).empty()) throw ConfigError("label_set contains an empty label");
        if (!seen.insert(to_lower(trim(label))).second)
            throw ConfigError("label_set contains duplicate label '" + label + "'");
    }
    if (field_schema.empty()) throw ConfigError("field_schema is empty");
    std::set<std::string> fields;
    for (const auto& f : field_schema) {
        if (f.empty()) throw ConfigError("field_schema contains an empty name");
        if (!fields.insert(f).second) throw ConfigError("duplicate field name '" + f + "'");
    }
}

const std::string& TaskSpec::template_for(AgentRole role) const {
    auto it = template_bindings.find(role);
    if (it == template_bindings.end())
        throw ConfigError("task '" + task_id + "' has no template bound for role '" +
                          std::string(to_string(role)) + "'");
    return it->second;
}

void TaskSpec::require_roles(const std::vector<AgentRole>& roles) const {
    for (AgentRole role : roles) (void)template_for(role);
}

std::optional<std::string> TaskSpec::canonical_label(std::string_view text) const {
    const std::string needle = trim(text);
    for (const auto& label : label_set)
        if (iequals(trim(label), needle)) return label;
    return std::nullopt;
}

Dataset validate_dataset(Dataset dataset, const TaskSpec& task) {
    std::set<std::string> ids;
    for (auto& example : dataset.examples) {
        const std::string where = "example '" + example.id + "'";
        if (example.id.empty()) throw InputError("example with empty id");
        if (!ids.insert(example.id).second) throw InputError("duplicate example id '" + example.id + "'");
        auto label = task.canonical_label(example.label);
        if (!label) throw InputError(where + ": unknown label '" + example.label + "'");
        example.label = *label;
        for (const auto& name : task.field_schema) {
            auto it = example.fields.find(name);
            if (it == example.fields.end()) throw InputError(where + ": missing field '" + name + "'");
            if (trim(it->second).empty()) throw InputError(where + ": empty field '" + name + "'");
        }
    }
    return dataset;
}

DatasetSplits split_dataset(const Dataset& dataset, SplitSizes sizes, std::uint64_t seed) {
    const std::size_t wanted = sizes.train + sizes.validation + sizes.test;
    if (wanted > dataset.size())
        throw PreconditionError("split sizes need " + std::to_string(wanted) +
                                " examples but the dataset has " + std::to_string(dataset.size()));

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SeededRng rng(seed);
    rng.shuffle(order);

    DatasetSplits out;
    out.train.split = SplitTag::train;
    out.validation.split = SplitTag::validation;
    out.test.split = SplitTag::test_ind;
    std::size_t cursor = 0;
    auto take = [&](Dataset& target, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) target.examples.push_back(dataset.examples[order[cursor++]]);
    };
    take(out.train, sizes.train);
    take(out.validation, sizes.validation);
    take(out.test, sizes.test);
    return out;
}

// ---------------------------------------------------------------------------

HypothesisBank::HypothesisBank(std::size_t capacity) : capacity_(capacity) {}

const BankEntry* HypothesisBank::find(std::string_view id) const {
    for (const auto& e : entries_)
        if (e.hypothesis.id == id) return &e;
    return nullptr;
}

void HypothesisBank::add(BankEntry entry) {
    if (entries_.size() >= capacity_)
        throw PreconditionError("hypothesis bank is full (capacity " + std::to_string(capacity_) + ")");
    if (find(entry.hypothesis.id))
        throw PreconditionError("duplicate hypothesis id '" + entry.hypothesis.id + "'");
    if (!entry.reward.valid())
        throw PreconditionError("hypothesis '" + entry.hypothesis.id + "' has n_correct > n_seen");
    entries_.push_back(std::move(entry));
}

void HypothesisBank::set_reward(std::size_t index, RewardState reward) {
    if (!reward.valid()) throw PreconditionError("reward state with n_correct > n_seen");
    entries_.at(index).reward = reward;
}

void HypothesisBank::set_text(std::size_t index, std::string text) {
    entries_.at(index).hypothesis.text = std::move(text);
}

void HypothesisBank::reorder(const std::vector<std::size_t>& order) {
    if (order.size() != entries_.size()) throw PreconditionError("reorder: wrong permutation size");
    std::vector<BankEntry> next;
    next.reserve(order.size());
    std::vector<bool> used(order.size(), false);
    for (std::size_t i : order) {
        if (i >= entries_.size() || used[i]) throw PreconditionError("reorder: not a permutation");
        used[i] = true;
        next.push_back(entries_[i]);
    }
    entries_ = std::move(next);
}

std::vector<std::string> HypothesisBank::texts() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.hypothesis.text);
    return out;
}

std::vector<std::string> HypothesisBank::ids() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.hypothesis.id);
    return out;
}

// ---------------------------------------------------------------------------

void EngineConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("engine config: " + m); };
    if (!(alpha >= 0.0)) fail("alpha must be >= 0");
    if (capacity < 1) fail("capacity must be >= 1");
    if (k < 1 || k > capacity) fail("k must satisfy 1 <= k <= capacity");
    const std::size_t wh = effective_w_hyp();
    if (wh < 1 || wh > k) fail("w_hyp must satisfy 1 <= w_hyp <= k");
    if (num_init < 1) fail("num_init must be >= 1");
    if (w_max < 1) fail("w_max must be >= 1");
    if (num_per_update < 1) fail("num_per_update must be >= 1");
    if (effective_init_hypotheses() < 1) fail("init_hypotheses must be >= 1");
    if (!(temperature >= 0.0)) fail("temperature must be >= 0");
    if (max_tokens < 1) fail("max_tokens must be >= 1");
    if (max_in_flight < 1) fail("max_in_flight must be >= 1");
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
    if (bound == 0) throw PreconditionError("SeededRng::below(0)");
    // Rejection sampling over the largest multiple of bound.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

}  // namespace hypogen
