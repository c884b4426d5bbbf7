#include "hypogen/combiner.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "hypogen/error.hpp"
#include "hypogen/log.hpp"

namespace hypogen {

RedundancyMatrix::RedundancyMatrix(std::vector<std::string> ids)
    : ids_(std::move(ids)), cells_(ids_.size() * ids_.size(), false) {}

void RedundancyMatrix::mark(std::size_t i, std::size_t j, bool value) {
    if (i == j) throw PreconditionError("redundancy matrix diagonal must stay false");
    if (i >= ids_.size() || j >= ids_.size()) throw PreconditionError("redundancy matrix index out of range");
    cells_[i * ids_.size() + j] = value;
    cells_[j * ids_.size() + i] = value;
}

RedundancyResult redundancy_matrix(const HypothesisBank& bank, const TaskContext& task, Gateway& gateway,
                                   const EngineConfig& config) {
    if (bank.empty()) throw PreconditionError("redundancy check needs a nonempty bank");
    RedundancyResult result{RedundancyMatrix(bank.ids()), {}};
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < bank.size(); ++i)
        for (std::size_t j = i + 1; j < bank.size(); ++j) pairs.emplace_back(i, j);

    static const std::vector<std::string> verdicts{"yes", "no"};
    result.ledger = parallel_map(pairs.size(), config.max_in_flight, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        RenderContext ctx;
        ctx.set("hypothesis_a", bank[i].hypothesis.text).set("hypothesis_b", bank[j].hypothesis.text);
        std::string raw = call_model(gateway, AgentRole::redundancy_checker,
                                     task.render(AgentRole::redundancy_checker, ctx), config);
        CheckerCall call{bank[i].hypothesis.id, bank[j].hypothesis.id, false, true};
        try {
            call.redundant = parse_final_answer(raw, verdicts) == "yes";
        } catch (const ParseError& e) {
            call.parse_ok = false;
            log::warn("redundancy verdict for " + call.first_id + "/" + call.second_id +
                      " did not parse, treated as not redundant: " + e.what());
        }
        return call;
    });
    for (std::size_t p = 0; p < pairs.size(); ++p)
        if (result.ledger[p].redundant) result.matrix.mark(pairs[p].first, pairs[p].second);
    return result;
}

std::vector<std::size_t> accuracy_order(const HypothesisBank& bank) {
    std::vector<std::size_t> order(bank.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const RewardState& ra = bank[a].reward;
        const RewardState& rb = bank[b].reward;
        if ((ra.n_seen == 0) != (rb.n_seen == 0)) return rb.n_seen == 0;
        if (ra.n_seen && rb.n_seen) {
            // Exact comparison of n_correct / n_seen via cross-multiplication.
            const auto lhs = static_cast<unsigned __int128>(ra.n_correct) * rb.n_seen;
            const auto rhs = static_cast<unsigned __int128>(rb.n_correct) * ra.n_seen;
            if (lhs != rhs) return lhs > rhs;
            if (ra.n_seen != rb.n_seen) return ra.n_seen > rb.n_seen;
        }
        return bank[a].hypothesis.id < bank[b].hypothesis.id;
    });
    return order;
}

HypothesisBank deduplicate(const HypothesisBank& bank, const RedundancyMatrix& matrix) {
    if (matrix.ids() != bank.ids()) throw PreconditionError("redundancy matrix is not aligned with the bank");
    std::vector<std::size_t> kept;
    for (std::size_t i : accuracy_order(bank)) {
        bool redundant = std::any_of(kept.begin(), kept.end(), [&](std::size_t j) { return matrix.redundant(i, j); });
        if (!redundant) kept.push_back(i);
    }
    HypothesisBank out(bank.capacity());
    for (std::size_t i : kept) out.add(bank[i]);
    return out;
}

UnionResult union_banks(const HypothesisBank& main_bank, const HypothesisBank& literature_bank, std::size_t capacity,
                        std::uint64_t seed) {
    if (main_bank.empty() && literature_bank.empty()) throw PreconditionError("union of two empty banks");
    if (capacity == 0) throw PreconditionError("union capacity must be >= 1");

    UnionResult result{HypothesisBank(capacity), {}, 0, 0};
    std::set<std::string> taken;
    auto take = [&](const BankEntry& e) {
        if (!taken.insert(e.hypothesis.id).second)
            throw PreconditionError("hypothesis id '" + e.hypothesis.id + "' appears in both banks");
        result.bank.add(e);
    };

    const std::vector<std::size_t> main_order = accuracy_order(main_bank);
    const std::size_t prefix = std::min(capacity / 2, main_bank.size());
    for (std::size_t i = 0; i < prefix; ++i) take(main_bank[main_order[i]]);
    result.main_prefix = prefix;

    std::vector<std::size_t> lit(literature_bank.size());
    std::iota(lit.begin(), lit.end(), 0);
    SeededRng rng(seed);
    // Partial Fisher-Yates: the first draws of a full shuffle.
    for (std::size_t d = 0; d < lit.size() && result.bank.size() < capacity; ++d) {
        std::size_t j = d + static_cast<std::size_t>(rng.below(lit.size() - d));
        std::swap(lit[d], lit[j]);
        take(literature_bank[lit[d]]);
        result.literature_ids.push_back(literature_bank[lit[d]].hypothesis.id);
    }

    for (std::size_t i = prefix; i < main_order.size() && result.bank.size() < capacity; ++i) {
        take(main_bank[main_order[i]]);
        ++result.backfill;
    }
    return result;
}

}  // namespace hypogen
