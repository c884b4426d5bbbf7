#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypogen/agents.hpp"
#include "hypogen/core.hpp"
#include "hypogen/gateway.hpp"

namespace hypogen {

// Symmetric n x n redundancy judgments over a fixed id ordering. The
// diagonal is always false.
class RedundancyMatrix {
public:
    RedundancyMatrix() = default;
    explicit RedundancyMatrix(std::vector<std::string> ids);

    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }

    bool redundant(std::size_t i, std::size_t j) const { return cells_[i * ids_.size() + j]; }
    // Sets both (i, j) and (j, i). Throws PreconditionError when i == j.
    void mark(std::size_t i, std::size_t j, bool value = true);

    friend bool operator==(const RedundancyMatrix&, const RedundancyMatrix&) = default;

private:
    std::vector<std::string> ids_;
    std::vector<bool> cells_;
};

struct CheckerCall {
    std::string first_id;
    std::string second_id;
    bool redundant = false;
    bool parse_ok = true;
};

struct RedundancyResult {
    RedundancyMatrix matrix;
    std::vector<CheckerCall> ledger;
};

// One checker call per unordered pair (i < j). An unparseable verdict is
// logged and read as "not redundant".
RedundancyResult redundancy_matrix(const HypothesisBank& bank, const TaskContext& task, Gateway& gateway,
                                   const EngineConfig& config);

// Ordering by training accuracy: higher accuracy, then more trials, then
// smaller id. Entries without trials come last. Returns bank indices.
std::vector<std::size_t> accuracy_order(const HypothesisBank& bank);

// Greedy filter in accuracy order: an entry is kept unless it is redundant
// with an entry already kept. The matrix must be aligned with the bank.
HypothesisBank deduplicate(const HypothesisBank& bank, const RedundancyMatrix& matrix);

struct UnionResult {
    HypothesisBank bank;
    std::vector<std::string> literature_ids;  // literature picks in draw order
    std::size_t main_prefix = 0;
    std::size_t backfill = 0;
};

// Top min(capacity / 2, |main|) of the main bank by accuracy, then seeded
// draws without replacement from the literature bank, then the rest of the
// main bank in accuracy order if still short.
UnionResult union_banks(const HypothesisBank& main_bank, const HypothesisBank& literature_bank, std::size_t capacity,
                        std::uint64_t seed);

}  // namespace hypogen
