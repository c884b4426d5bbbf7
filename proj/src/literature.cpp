#include "hypogen/literature.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hypogen/error.hpp"
#include "hypogen/log.hpp"
#include "json.hpp"

namespace hypogen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string text_field(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_array()) {
        std::string out;
        for (const auto& part : j) {
            std::string piece = part.is_object() ? part.value("text", std::string()) : text_field(part);
            if (trim(piece).empty()) continue;
            if (!out.empty()) out += "\n\n";
            out += piece;
        }
        return out;
    }
    return {};
}

}  // namespace

PaperDoc load_paper(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot read paper file " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("paper file " + file.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw InputError("paper file " + file.string() + " is not a JSON object");

    const json& body = doc.contains("pdf_parse") && doc["pdf_parse"].is_object() ? doc["pdf_parse"] : doc;

    PaperDoc paper;
    paper.paper_id = doc.contains("paper_id") && doc["paper_id"].is_string() ? doc["paper_id"].get<std::string>()
                                                                              : file.stem().string();
    if (doc.contains("title")) paper.title = trim(text_field(doc["title"]));
    if (paper.title.empty() && body.contains("title")) paper.title = trim(text_field(body["title"]));
    if (paper.title.empty()) throw InputError("paper file " + file.string() + " has no title");

    if (body.contains("abstract")) paper.abstract = trim(text_field(body["abstract"]));
    else if (doc.contains("abstract")) paper.abstract = trim(text_field(doc["abstract"]));

    if (body.contains("body_text") && body["body_text"].is_array()) {
        for (const auto& para : body["body_text"]) {
            if (!para.is_object()) continue;
            std::string heading = para.contains("section") && para["section"].is_string()
                                      ? para["section"].get<std::string>()
                                      : std::string();
            std::string text = trim(para.value("text", std::string()));
            if (text.empty()) continue;
            if (!paper.body_sections.empty() && paper.body_sections.back().first == heading)
                paper.body_sections.back().second += "\n\n" + text;
            else
                paper.body_sections.emplace_back(std::move(heading), std::move(text));
        }
    }
    if (paper.abstract.empty() && paper.body_sections.empty())
        throw InputError("paper file " + file.string() + " has neither abstract nor body text");
    if (paper.body_sections.empty()) log::warn("paper '" + paper.paper_id + "' has no body text; using title and abstract");
    return paper;
}

std::vector<PaperDoc> ingest_corpus(const fs::path& path) {
    if (!fs::exists(path)) throw InputError("corpus path not found: " + path.string());
    if (!fs::is_directory(path)) return {load_paper(path)};
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("corpus directory " + path.string() + " holds no .json papers");
    std::vector<PaperDoc> papers;
    for (const auto& f : files) papers.push_back(load_paper(f));
    return papers;
}

std::string paper_text(const PaperDoc& paper) {
    std::string out = "Title: " + paper.title + "\n";
    if (!paper.abstract.empty()) out += "\nAbstract:\n" + paper.abstract + "\n";
    for (const auto& [heading, text] : paper.body_sections) {
        out += "\n";
        if (!heading.empty()) out += heading + "\n";
        out += text + "\n";
    }
    return out;
}

std::string truncate_utf8(std::string_view text, std::size_t max_bytes) {
    if (text.size() <= max_bytes) return std::string(text);
    std::size_t cut = max_bytes;
    // Back off continuation bytes (10xxxxxx) so a code point is never split.
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    return std::string(text.substr(0, cut));
}

PaperSummary summarize_paper(const PaperDoc& paper, const TaskContext& task, Gateway& gateway,
                             const EngineConfig& config) {
    const std::size_t budget = config.effective_char_budget();
    RenderContext ctx;
    ctx.set("paper", std::string());
    const RenderedPrompt skeleton = task.render(AgentRole::summarizer, ctx);
    const std::size_t overhead = skeleton.system.size() + skeleton.user.size();
    if (overhead >= budget)
        throw ConfigError("summarizer template alone exceeds the character budget of " + std::to_string(budget));

    const std::string full = paper_text(paper);
    std::string text = truncate_utf8(full, budget - overhead);
    if (text.size() < full.size())
        log::info("paper '" + paper.paper_id + "' cut from " + std::to_string(full.size()) + " to " +
                  std::to_string(text.size()) + " characters");
    ctx.set("paper", std::move(text));

    std::string summary = trim(call_model(gateway, AgentRole::summarizer, task.render(AgentRole::summarizer, ctx), config));
    if (summary.empty()) throw GatewayError("empty summary for paper '" + paper.paper_id + "'");
    return PaperSummary{paper.paper_id, paper.title, std::move(summary)};
}

std::vector<PaperSummary> summarize_corpus(const std::vector<PaperDoc>& papers, const TaskContext& task,
                                           Gateway& gateway, const EngineConfig& config) {
    task.spec.require_roles({AgentRole::summarizer});
    return parallel_map(papers.size(), config.max_in_flight,
                        [&](std::size_t i) { return summarize_paper(papers[i], task, gateway, config); });
}

std::string format_summaries(const std::vector<PaperSummary>& summaries) {
    std::string out;
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        if (i) out += "\n\n";
        out += std::to_string(i + 1) + ". Title: " + summaries[i].title + "\nKey Findings: " + summaries[i].summary_text;
    }
    return out;
}

HypothesisBank generate_literature_hypotheses(const std::vector<PaperSummary>& summaries, const TaskContext& task,
                                              std::size_t n, Gateway& gateway, const EngineConfig& config) {
    if (summaries.empty()) throw PreconditionError("literature generation needs at least one summary");
    if (n == 0) throw PreconditionError("literature generation needs n >= 1");
    RenderContext ctx;
    ctx.set("num_hypotheses", n).set("summaries", format_summaries(summaries));
    auto result =
        request_hypotheses(gateway, AgentRole::literature_generator, task.render(AgentRole::literature_generator, ctx),
                           n, config);
    HypothesisBank bank(std::max(n, config.capacity));
    for (std::size_t i = 0; i < result.texts.size(); ++i)
        bank.add({Hypothesis{make_hypothesis_id('L', i + 1), result.texts[i], Provenance::literature, 0}, {}});
    return bank;
}

HypothesisBank boost_specificity(const HypothesisBank& bank, const TaskContext& task, Gateway& gateway,
                                 const EngineConfig& config) {
    if (!config.specificity_boost) return bank;
    if (bank.empty()) throw PreconditionError("specificity boost needs a nonempty bank");
    try {
        auto texts = parallel_map(bank.size(), config.max_in_flight, [&](std::size_t i) {
            RenderContext ctx;
            ctx.set("hypothesis", bank[i].hypothesis.text);
            return request_hypotheses(gateway, AgentRole::booster, task.render(AgentRole::booster, ctx), 1, config)
                .texts.front();
        });
        HypothesisBank out = bank;
        for (std::size_t i = 0; i < texts.size(); ++i) out.set_text(i, std::move(texts[i]));
        return out;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::gateway && e.kind() != ErrorKind::parse) throw;
        log::error(std::string("specificity boost abandoned, bank left unchanged: ") + e.what());
        return bank;
    }
}

}  // namespace hypogen
