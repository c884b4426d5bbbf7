#include <fstream>
#include <regex>

#include "doctest.h"
#include "hypogen/error.hpp"
#include "hypogen/literature.hpp"
#include "hypogen/log.hpp"
#include "support/fixtures.hpp"
#include "support/scripted_gateway.hpp"

using namespace hypogen;
using namespace hypogen::testing;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string numbered_items(std::size_t n, const std::string& stem = "Hypothesis") {
    std::string out = "Proposed hypotheses:\n";
    for (std::size_t i = 1; i <= n; ++i) out += std::to_string(i) + ". " + stem + " " + std::to_string(i) + "\n";
    return out;
}

std::vector<PaperSummary> summaries(std::size_t n) {
    std::vector<PaperSummary> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({"p" + std::to_string(i), "Paper " + std::to_string(i), "Finding " + std::to_string(i)});
    return out;
}

HypothesisBank small_bank(std::size_t n) {
    HypothesisBank b(n);
    for (std::size_t i = 0; i < n; ++i)
        b.add({{"L00000" + std::to_string(i + 1), "Idea " + std::to_string(i), Provenance::literature, 0}, {i, i + 2}});
    return b;
}

}  // namespace

TEST_CASE("doc2json papers load, nested or flat") {
    auto dir = scratch_dir("papers");
    write_file(dir / "a.json", R"({"paper_id": "A", "title": "Lies in Reviews",
        "pdf_parse": {"abstract": [{"text": "First part."}, {"text": "Second part."}],
                      "body_text": [{"section": "Intro", "text": "p1"}, {"section": "Intro", "text": "p2"},
                                    {"section": "Method", "text": "p3"}]}})");
    write_file(dir / "b.json", R"({"title": "Only Abstract", "abstract": "Short.", "body_text": []})");
    std::vector<std::string> warnings;
    auto old = log::set_sink([&](log::Level l, std::string_view m) {
        if (l == log::Level::warn) warnings.emplace_back(m);
    });
    auto papers = ingest_corpus(dir);
    log::set_sink(old);
    REQUIRE(papers.size() == 2);
    CHECK(papers[0].paper_id == "A");
    CHECK(papers[0].abstract.find("First part.") != std::string::npos);
    CHECK(papers[0].abstract.find("Second part.") != std::string::npos);
    REQUIRE(papers[0].body_sections.size() == 2);
    CHECK(papers[0].body_sections[0].first == "Intro");
    CHECK(papers[1].paper_id == "b");
    CHECK(papers[1].body_sections.empty());
    CHECK(warnings.size() == 1);
}

TEST_CASE("corpus is read in filename order") {
    auto dir = scratch_dir("papers-order");
    for (int i = 9; i >= 0; --i)
        write_file(dir / ("paper" + std::to_string(i) + ".json"),
                   R"({"title": "T)" + std::to_string(i) + R"(", "abstract": "x"})");
    auto papers = ingest_corpus(dir);
    REQUIRE(papers.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(papers[i].title == "T" + std::to_string(i));
}

TEST_CASE("papers without a title or without any text are rejected by name") {
    auto dir = scratch_dir("papers-bad");
    write_file(dir / "untitled.json", R"({"abstract": "x"})");
    try {
        load_paper(dir / "untitled.json");
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("untitled.json") != std::string::npos);
    }
    write_file(dir / "hollow.json", R"({"title": "T"})");
    CHECK_THROWS_AS(load_paper(dir / "hollow.json"), InputError);
    CHECK_THROWS_AS(ingest_corpus(dir / "missing"), InputError);
}

TEST_CASE("utf-8 truncation never splits a character") {
    const std::string s = "ab\xC3\xA9\xE2\x82\xAC";  // a b e-acute euro
    CHECK(truncate_utf8(s, 2) == "ab");
    CHECK(truncate_utf8(s, 3) == "ab");
    CHECK(truncate_utf8(s, 4) == "ab\xC3\xA9");
    CHECK(truncate_utf8(s, 6) == "ab\xC3\xA9");
    CHECK(truncate_utf8(s, 7) == s);
    CHECK(truncate_utf8(s, 100) == s);
}

TEST_CASE("summarize_paper makes one focused call and keeps the reply verbatim") {
    RunConfig rc = load_task("deception");
    ScriptedGateway gw([](const CompletionRequest&) { return "Key finding: deceptive reviews overuse pronouns."; });
    PaperDoc p{"p1", "Deceptive Opinion Spam", "We study fake reviews.", {{"Intro", "Body."}}};
    auto s = summarize_paper(p, rc.task, gw, rc.engine);
    CHECK(s.summary_text == "Key finding: deceptive reviews overuse pronouns.");
    CHECK(s.paper_id == "p1");
    REQUIRE(gw.total() == 1);
    CHECK(gw.calls()[0].role == AgentRole::summarizer);
    CHECK(gw.calls()[0].user_prompt.find("truthful or deceptive") != std::string::npos);
    CHECK(gw.calls()[0].user_prompt.find("Deceptive Opinion Spam") != std::string::npos);

    ScriptedGateway empty([](const CompletionRequest&) { return "   "; });
    CHECK_THROWS_AS(summarize_paper(p, rc.task, empty, rc.engine), GatewayError);
}

TEST_CASE("oversized papers are cut to the character budget, head first") {
    RunConfig rc = load_task("deception");
    EngineConfig c = rc.engine;
    c.max_tokens = 500;  // budget 2000 bytes
    PaperDoc p{"big", "Big Paper", "Abstract text.", {}};
    for (int i = 0; i < 10; ++i) p.body_sections.push_back({"Section " + std::to_string(i), std::string(400, 'x')});
    ScriptedGateway gw([](const CompletionRequest&) { return "summary"; });
    summarize_paper(p, rc.task, gw, c);
    const auto call = gw.calls().at(0);
    CHECK(call.system_prompt.size() + call.user_prompt.size() <= c.effective_char_budget());
    CHECK(call.user_prompt.find("Big Paper") != std::string::npos);
    CHECK(call.user_prompt.find("Abstract text.") != std::string::npos);
    CHECK(call.user_prompt.find("Section 0") != std::string::npos);
    CHECK(call.user_prompt.find("Section 9") == std::string::npos);
}

TEST_CASE("summaries come back in corpus order under concurrency") {
    RunConfig rc = load_task("synthetic");
    EngineConfig c = rc.engine;
    c.max_in_flight = 4;
    std::vector<PaperDoc> papers;
    for (int i = 0; i < 12; ++i) papers.push_back({"p" + std::to_string(i), "Title" + std::to_string(i), "abs", {}});
    ScriptedGateway gw([](const CompletionRequest& r) {
        std::smatch m;
        std::regex_search(r.user_prompt, m, std::regex("Title(\\d+)"));
        return "summary of " + m[1].str();
    });
    auto s = summarize_corpus(papers, rc.task, gw, c);
    REQUIRE(s.size() == 12);
    for (int i = 0; i < 12; ++i) CHECK(s[i].summary_text == "summary of " + std::to_string(i));
    CHECK(gw.total() == 12);
}

TEST_CASE("literature hypotheses come from one call over all summaries") {
    RunConfig rc = load_task("deception");
    ScriptedGateway gw([](const CompletionRequest&) { return numbered_items(20); });
    auto bank = generate_literature_hypotheses(summaries(10), rc.task, 20, gw, rc.engine);
    CHECK(bank.size() == 20);
    CHECK(gw.total() == 1);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(gw.calls()[0].user_prompt.find("Finding " + std::to_string(i)) != std::string::npos);
    for (const auto& e : bank.entries()) {
        CHECK(e.hypothesis.provenance == Provenance::literature);
        CHECK(e.reward.n_seen == 0);
        CHECK(e.hypothesis.id[0] == 'L');
    }
    CHECK_THROWS_AS(generate_literature_hypotheses({}, rc.task, 20, gw, rc.engine), PreconditionError);
}

TEST_CASE("a short literature answer is retried once and the shortfall kept") {
    RunConfig rc = load_task("deception");
    ScriptedGateway gw([](const CompletionRequest&) { return numbered_items(17); });
    auto bank = generate_literature_hypotheses(summaries(2), rc.task, 20, gw, rc.engine);
    CHECK(bank.size() == 17);
    CHECK(gw.total() == 2);
    ScriptedGateway prose([](const CompletionRequest&) { return "I cannot help with that."; });
    CHECK_THROWS_AS(generate_literature_hypotheses(summaries(2), rc.task, 20, prose, rc.engine), ParseError);
    CHECK(prose.total() == 2);
}

TEST_CASE("retry keeps the longer of the two answers") {
    RunConfig rc = load_task("deception");
    int call = 0;
    ScriptedGateway gw([&](const CompletionRequest&) { return ++call == 1 ? numbered_items(12, "A") : numbered_items(5, "B"); });
    auto bank = generate_literature_hypotheses(summaries(1), rc.task, 20, gw, rc.engine);
    CHECK(bank.size() == 12);
    CHECK(bank[0].hypothesis.text == "A 1");
}

TEST_CASE("specificity boost rewrites texts and nothing else") {
    RunConfig rc = load_task("deception");
    EngineConfig c = rc.engine;
    HypothesisBank bank = small_bank(4);
    ScriptedGateway gw([](const CompletionRequest& r) {
        std::smatch m;
        std::regex_search(r.user_prompt, m, std::regex("Hypothesis: ([^\\n]*)"));
        return "1. " + m[1].str() + ", for example in the lobby.";
    });
    CHECK(boost_specificity(bank, rc.task, gw, c) == bank);
    CHECK(gw.total() == 0);
    c.specificity_boost = true;
    auto boosted = boost_specificity(bank, rc.task, gw, c);
    CHECK(gw.count(AgentRole::booster) == 4);
    REQUIRE(boosted.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(boosted[i].hypothesis.id == bank[i].hypothesis.id);
        CHECK(boosted[i].reward == bank[i].reward);
        CHECK(boosted[i].hypothesis.provenance == bank[i].hypothesis.provenance);
        CHECK(boosted[i].hypothesis.text == bank[i].hypothesis.text + ", for example in the lobby.");
    }
    CHECK_THROWS_AS(boost_specificity(HypothesisBank(3), rc.task, gw, c), PreconditionError);
}

TEST_CASE("a failed boost call leaves the bank untouched") {
    RunConfig rc = load_task("deception");
    EngineConfig c = rc.engine;
    c.specificity_boost = true;
    ScriptedGateway gw([](const CompletionRequest& r) {
        return r.user_prompt.find("Idea 2") != std::string::npos ? std::string("no list") : std::string("1. better");
    });
    HypothesisBank bank = small_bank(4);
    CHECK(boost_specificity(bank, rc.task, gw, c) == bank);
}

TEST_CASE("summary formatting is numbered with titles") {
    CHECK(format_summaries(summaries(2)) == "1. Title: Paper 0\nKey Findings: Finding 0\n\n2. Title: Paper 1\nKey Findings: Finding 1");
}
