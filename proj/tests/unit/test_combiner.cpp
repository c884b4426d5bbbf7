#include <random>
#include <set>

#include "doctest.h"
#include "hypogen/combiner.hpp"
#include "hypogen/error.hpp"
#include "hypogen/log.hpp"
#include "support/fixtures.hpp"
#include "support/scripted_gateway.hpp"

using namespace hypogen;
using namespace hypogen::testing;

namespace {

BankEntry entry(std::string id, std::uint64_t correct, std::uint64_t seen, Provenance p = Provenance::data) {
    return {{std::move(id), "text of entry", p, 0}, {correct, seen}};
}

HypothesisBank bank_of(char prefix, std::size_t n, std::size_t capacity) {
    HypothesisBank b(capacity);
    for (std::size_t i = 0; i < n; ++i) {
        BankEntry e = entry(make_hypothesis_id(prefix, i + 1), 100 - i, 100);
        e.hypothesis.text = std::string(1, prefix) + " idea " + std::to_string(i);
        b.add(e);
    }
    return b;
}

}  // namespace

TEST_CASE("redundancy matrix is symmetric with a false diagonal") {
    RedundancyMatrix m({"a", "b", "c"});
    m.mark(0, 2);
    CHECK(m.redundant(0, 2));
    CHECK(m.redundant(2, 0));
    CHECK_FALSE(m.redundant(0, 1));
    for (std::size_t i = 0; i < 3; ++i) CHECK_FALSE(m.redundant(i, i));
    CHECK_THROWS_AS(m.mark(1, 1), PreconditionError);
    CHECK_THROWS_AS(m.mark(0, 3), PreconditionError);
}

TEST_CASE("checker is asked once per unordered pair") {
    RunConfig rc = load_task("synthetic");
    HypothesisBank b(8);
    for (auto [id, text] : std::vector<std::pair<std::string, std::string>>{
             {"h1", "warm words"}, {"h2", "long texts"}, {"h3", "warm words again"}, {"h4", "short texts"}})
        b.add({{id, text, Provenance::data, 0}, {1, 2}});
    ScriptedGateway gw([](const CompletionRequest& r) {
        const bool both_warm = r.user_prompt.find("A: warm") != std::string::npos &&
                               r.user_prompt.find("B: warm") != std::string::npos;
        return std::string(both_warm ? "Final answer: yes" : "Final answer: no");
    });
    auto res = redundancy_matrix(b, rc.task, gw, rc.engine);
    CHECK(gw.total() == 6);
    CHECK(gw.count(AgentRole::redundancy_checker) == 6);
    CHECK(res.ledger.size() == 6);
    CHECK(res.matrix.ids() == b.ids());
    CHECK(res.matrix.redundant(0, 2));
    CHECK(res.matrix.redundant(2, 0));
    std::size_t marked = 0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j) marked += res.matrix.redundant(i, j);
    CHECK(marked == 1);

    HypothesisBank one(3);
    one.add(entry("h1", 1, 1));
    ScriptedGateway none([](const CompletionRequest&) { return std::string("Final answer: yes"); });
    auto single = redundancy_matrix(one, rc.task, none, rc.engine);
    CHECK(none.total() == 0);
    CHECK(single.matrix.size() == 1);
    CHECK_THROWS_AS(redundancy_matrix(HypothesisBank(3), rc.task, none, rc.engine), PreconditionError);
}

TEST_CASE("an unparseable verdict reads as not redundant") {
    RunConfig rc = load_task("synthetic");
    HypothesisBank b(3);
    b.add(entry("h1", 1, 1));
    b.add(entry("h2", 1, 1));
    ScriptedGateway gw([](const CompletionRequest&) { return std::string("They look alike to me."); });
    auto old = log::set_sink([](log::Level, std::string_view) {});
    auto res = redundancy_matrix(b, rc.task, gw, rc.engine);
    log::set_sink(old);
    REQUIRE(res.ledger.size() == 1);
    CHECK_FALSE(res.ledger[0].parse_ok);
    CHECK_FALSE(res.ledger[0].redundant);
    CHECK_FALSE(res.matrix.redundant(0, 1));
}

TEST_CASE("deduplication keeps the more accurate of a redundant pair") {
    HypothesisBank b(5);
    b.add(entry("h1", 8, 10));
    b.add(entry("h2", 7, 10));
    b.add(entry("h3", 6, 10));
    RedundancyMatrix m(b.ids());
    m.mark(0, 2);
    auto d = deduplicate(b, m);
    CHECK(d.ids() == std::vector<std::string>{"h1", "h2"});
    CHECK(d.capacity() == b.capacity());
    CHECK(*d.find("h1") == b[0]);

    RedundancyMatrix all(b.ids());
    all.mark(0, 1);
    all.mark(0, 2);
    all.mark(1, 2);
    CHECK(deduplicate(b, all).ids() == std::vector<std::string>{"h1"});

    CHECK_THROWS_AS(deduplicate(b, RedundancyMatrix({"h1", "h3", "h2"})), PreconditionError);
}

TEST_CASE("accuracy order: accuracy, then trials, then id, unseen last") {
    HypothesisBank b(6);
    b.add(entry("h5", 0, 0));
    b.add(entry("h4", 1, 2));
    b.add(entry("h3", 2, 4));
    b.add(entry("h2", 3, 4));
    b.add(entry("h1", 1, 2));
    auto order = accuracy_order(b);
    std::vector<std::string> ids;
    for (auto i : order) ids.push_back(b[i].hypothesis.id);
    CHECK(ids == std::vector<std::string>{"h2", "h3", "h1", "h4", "h5"});
}

TEST_CASE("deduplication is idempotent and never keeps a redundant pair") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 7;
        HypothesisBank b(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t seen = 1 + rng() % 5;
            b.add(entry(make_hypothesis_id('h', i + 1), rng() % (seen + 1), seen));
        }
        RedundancyMatrix m(b.ids());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (rng() % 3 == 0) m.mark(i, j);
        auto once = deduplicate(b, m);
        REQUIRE(once.size() >= 1);
        CHECK(once[0] == b[accuracy_order(b)[0]]);
        std::vector<std::size_t> kept;
        for (const auto& e : once.entries())
            for (std::size_t i = 0; i < n; ++i)
                if (b[i].hypothesis.id == e.hypothesis.id) kept.push_back(i);
        for (std::size_t a = 0; a < kept.size(); ++a)
            for (std::size_t c = a + 1; c < kept.size(); ++c) CHECK_FALSE(m.redundant(kept[a], kept[c]));
        RedundancyMatrix sub(once.ids());
        for (std::size_t a = 0; a < kept.size(); ++a)
            for (std::size_t c = a + 1; c < kept.size(); ++c)
                if (m.redundant(kept[a], kept[c])) sub.mark(a, c);
        CHECK(deduplicate(once, sub) == once);
    }
}

TEST_CASE("union takes half from the main bank and fills from the literature") {
    auto u = union_banks(bank_of('h', 15, 20), bank_of('L', 12, 20), 20, 7);
    CHECK(u.bank.size() == 20);
    CHECK(u.main_prefix == 10);
    CHECK(u.literature_ids.size() == 10);
    CHECK(u.backfill == 0);
    for (std::size_t i = 0; i < 10; ++i) CHECK(u.bank[i].hypothesis.id == make_hypothesis_id('h', i + 1));
    for (std::size_t i = 10; i < 20; ++i) CHECK(u.bank[i].hypothesis.id[0] == 'L');

    auto small = union_banks(bank_of('h', 4, 20), bank_of('L', 30, 30), 20, 7);
    CHECK(small.main_prefix == 4);
    CHECK(small.literature_ids.size() == 16);
    CHECK(small.bank.size() == 20);

    auto no_lit = union_banks(bank_of('h', 25, 25), HypothesisBank(20), 20, 7);
    CHECK(no_lit.bank.size() == 20);
    CHECK(no_lit.backfill == 10);
    for (std::size_t i = 0; i < 20; ++i) CHECK(no_lit.bank[i].hypothesis.id == make_hypothesis_id('h', i + 1));

    CHECK(union_banks(bank_of('h', 15, 20), bank_of('L', 12, 20), 20, 7).bank == u.bank);
    CHECK_THROWS_AS(union_banks(bank_of('h', 3, 5), bank_of('h', 3, 5), 20, 7), PreconditionError);
    CHECK_THROWS_AS(union_banks(HypothesisBank(5), HypothesisBank(5), 20, 7), PreconditionError);
}

TEST_CASE("union literature picks depend on the seed only") {
    std::set<std::vector<std::string>> picks;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto a = union_banks(bank_of('h', 15, 20), bank_of('L', 30, 30), 20, seed);
        auto b = union_banks(bank_of('h', 15, 20), bank_of('L', 30, 30), 20, seed);
        CHECK(a.literature_ids == b.literature_ids);
        std::set<std::string> unique(a.literature_ids.begin(), a.literature_ids.end());
        CHECK(unique.size() == a.literature_ids.size());
        picks.insert(a.literature_ids);
    }
    CHECK(picks.size() > 1);
}
