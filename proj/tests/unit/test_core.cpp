#include <set>

#include "doctest.h"
#include "hypogen/core.hpp"
#include "hypogen/dataset_io.hpp"
#include "hypogen/error.hpp"
#include "support/fixtures.hpp"

using namespace hypogen;
using hypogen::testing::text_example;

namespace {

TaskSpec binary_task() {
    TaskSpec t;
    t.task_id = "deception";
    t.label_set = {"truthful", "deceptive"};
    t.field_schema = {"text"};
    return t;
}

Dataset numbered(std::size_t n) {
    Dataset d;
    for (std::size_t i = 0; i < n; ++i)
        d.examples.push_back(text_example("e" + std::to_string(i), "review " + std::to_string(i),
                                          i % 2 ? "truthful" : "deceptive"));
    return d;
}

}  // namespace

TEST_CASE("validate_dataset accepts well formed examples unchanged") {
    Dataset d = numbered(3);
    Dataset out = validate_dataset(d, binary_task());
    CHECK(out.examples == d.examples);
}

TEST_CASE("validate_dataset names the offending example") {
    Dataset d = numbered(3);
    d.examples[1].label = "maybe";
    try {
        validate_dataset(d, binary_task());
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("e1") != std::string::npos);
        CHECK(std::string(e.what()).find("maybe") != std::string::npos);
    }
}

TEST_CASE("validate_dataset rejects duplicate ids and missing fields") {
    Dataset d = numbered(2);
    d.examples[1].id = "e0";
    CHECK_THROWS_AS(validate_dataset(d, binary_task()), InputError);
    Dataset m = numbered(1);
    m.examples[0].fields.clear();
    CHECK_THROWS_AS(validate_dataset(m, binary_task()), InputError);
    Dataset blank = numbered(1);
    blank.examples[0].fields["text"] = "   ";
    CHECK_THROWS_AS(validate_dataset(blank, binary_task()), InputError);
}

TEST_CASE("labels match case-insensitively and canonicalize to the task spelling") {
    TaskSpec t = binary_task();
    CHECK(t.canonical_label("  Truthful ") == std::optional<std::string>("truthful"));
    CHECK_FALSE(t.canonical_label("truth").has_value());
    Dataset d = numbered(1);
    d.examples[0].label = "DECEPTIVE";
    CHECK(validate_dataset(d, t).examples[0].label == "deceptive");
}

TEST_CASE("task spec validation") {
    TaskSpec t = binary_task();
    CHECK_NOTHROW(t.validate());
    t.label_set = {"only"};
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t.label_set = {"a", "a"};
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t.label_set = {"a", ""};
    CHECK_THROWS_AS(t.validate(), ConfigError);
    TaskSpec r = binary_task();
    CHECK_THROWS_AS(r.template_for(AgentRole::inference), ConfigError);
    r.template_bindings[AgentRole::inference] = "x";
    CHECK(r.template_for(AgentRole::inference) == "x");
}

TEST_CASE("split_dataset produces disjoint splits of the requested sizes") {
    Dataset d = numbered(800);
    auto s = split_dataset(d, {200, 300, 300}, 11376);
    CHECK(s.train.size() == 200);
    CHECK(s.validation.size() == 300);
    CHECK(s.test.size() == 300);
    std::set<std::string> ids;
    for (const auto* part : {&s.train, &s.validation, &s.test})
        for (const auto& e : part->examples) ids.insert(e.id);
    CHECK(ids.size() == 800);
    CHECK(s.train.split == SplitTag::train);
    CHECK(s.validation.split == SplitTag::validation);
    CHECK(s.test.split == SplitTag::test_ind);
}

TEST_CASE("split_dataset is a pure function of its inputs") {
    Dataset d = numbered(50);
    auto a = split_dataset(d, {10, 10, 10}, 543);
    auto b = split_dataset(d, {10, 10, 10}, 543);
    CHECK(a.train.examples == b.train.examples);
    CHECK(a.test.examples == b.test.examples);
    auto c = split_dataset(d, {10, 10, 10}, 544);
    CHECK_FALSE(a.train.examples == c.train.examples);
}

TEST_CASE("split_dataset edge cases") {
    Dataset d = numbered(5);
    auto z = split_dataset(d, {0, 0, 0}, 1);
    CHECK(z.train.empty());
    CHECK(z.validation.empty());
    CHECK(z.test.empty());
    CHECK_THROWS_AS(split_dataset(d, {3, 2, 1}, 1), PreconditionError);
}

TEST_CASE("hypothesis bank keeps ids unique and respects capacity") {
    HypothesisBank bank(2);
    bank.add({{"h1", "a", Provenance::data, 0}, {1, 2}});
    CHECK_THROWS_AS(bank.add({{"h1", "b", Provenance::data, 0}, {}}), PreconditionError);
    bank.add({{"h2", "b", Provenance::data, 0}, {}});
    CHECK_THROWS_AS(bank.add({{"h3", "c", Provenance::data, 0}, {}}), PreconditionError);
    CHECK_THROWS_AS(bank.set_reward(0, {3, 2}), PreconditionError);
    bank.reorder({1, 0});
    CHECK(bank.ids() == std::vector<std::string>{"h2", "h1"});
    CHECK_THROWS_AS(bank.reorder({0, 0}), PreconditionError);
}

TEST_CASE("reward state bookkeeping") {
    RewardState r;
    CHECK_FALSE(r.training_accuracy().has_value());
    r.record(true);
    r.record(false);
    CHECK(r.n_seen == 2);
    CHECK(r.n_correct == 1);
    CHECK(*r.training_accuracy() == doctest::Approx(0.5));
}

TEST_CASE("engine config defaults and invariants") {
    EngineConfig c;
    CHECK(c.alpha == 0.5);
    CHECK(c.k == 10);
    CHECK(c.w_max == 10);
    CHECK(c.num_init == 10);
    CHECK(c.capacity == 20);
    CHECK(c.num_per_update == 10);
    CHECK(c.refine_rounds == 6);
    CHECK(c.temperature == 1e-5);
    CHECK(c.max_tokens == 4000);
    CHECK(c.effective_w_hyp() == 5);
    CHECK(c.effective_char_budget() == 16000);
    CHECK_NOTHROW(c.validate());
    EngineConfig bad = c;
    bad.k = 21;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.w_hyp = 11;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.alpha = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.w_max = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.num_init = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("seeded rng is reproducible and bounded") {
    SeededRng a(7), b(7);
    for (int i = 0; i < 100; ++i) {
        auto x = a.below(13);
        CHECK(x == b.below(13));
        CHECK(x < 13);
    }
    CHECK_THROWS_AS(a.below(0), PreconditionError);
}

TEST_CASE("tag names round trip") {
    for (auto role : all_agent_roles()) CHECK(parse_agent_role(to_string(role)) == role);
    for (auto tag : {SplitTag::train, SplitTag::validation, SplitTag::test_ind, SplitTag::test_ood})
        CHECK(parse_split_tag(to_string(tag)) == tag);
    for (auto p : {Provenance::literature, Provenance::data, Provenance::refined, Provenance::zero_shot})
        CHECK(parse_provenance(to_string(p)) == p);
    CHECK_THROWS_AS(parse_split_tag("holdout"), InputError);
}

TEST_CASE("dataset files round trip with their split tag") {
    auto dir = hypogen::testing::scratch_dir("dataset-io");
    Dataset d = numbered(4);
    d.split = SplitTag::test_ood;
    write_dataset(dir / "d.jsonl", d);
    Dataset back = load_dataset(dir / "d.jsonl", binary_task());
    CHECK(back.examples == d.examples);
    CHECK(back.split == SplitTag::test_ood);
    CHECK_THROWS_AS(load_dataset(dir / "d.jsonl", binary_task(), SplitTag::train), InputError);
}
