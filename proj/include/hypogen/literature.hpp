#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hypogen/agents.hpp"
#include "hypogen/core.hpp"
#include "hypogen/gateway.hpp"

namespace hypogen {

struct PaperDoc {
    std::string paper_id;
    std::string title;
    std::string abstract;
    std::vector<std::pair<std::string, std::string>> body_sections;  // (heading, text)

    friend bool operator==(const PaperDoc&, const PaperDoc&) = default;
};

struct PaperSummary {
    std::string paper_id;
    std::string title;
    std::string summary_text;

    friend bool operator==(const PaperSummary&, const PaperSummary&) = default;
};

// Reads one structured paper file. Accepts the doc2json layout: title,
// abstract (string or list of {text}), body_text (list of {section, text}),
// optionally nested under "pdf_parse". The file stem is the fallback id.
PaperDoc load_paper(const std::filesystem::path& file);

// A single file, or every *.json file of a directory in filename order.
std::vector<PaperDoc> ingest_corpus(const std::filesystem::path& path);

// Title, abstract, then body sections in order.
std::string paper_text(const PaperDoc& paper);

// Longest prefix of at most `max_bytes` bytes that ends on a UTF-8
// character boundary.
std::string truncate_utf8(std::string_view text, std::size_t max_bytes);

// One summarizer call. The paper text is cut so the whole rendered prompt
// fits the configured character budget.
PaperSummary summarize_paper(const PaperDoc& paper, const TaskContext& task, Gateway& gateway,
                             const EngineConfig& config);

// Summaries in corpus order; calls may overlap up to config.max_in_flight.
std::vector<PaperSummary> summarize_corpus(const std::vector<PaperDoc>& papers, const TaskContext& task,
                                           Gateway& gateway, const EngineConfig& config);

// "1. Title: ...\nKey Findings: ..." blocks separated by blank lines.
std::string format_summaries(const std::vector<PaperSummary>& summaries);

// One generation call over all summaries. Returns at most `n` hypotheses
// with literature provenance and no trials.
HypothesisBank generate_literature_hypotheses(const std::vector<PaperSummary>& summaries, const TaskContext& task,
                                              std::size_t n, Gateway& gateway, const EngineConfig& config);

// Rewrites every hypothesis with one booster call each. Ids, order,
// provenance and rewards are kept. Any failed call leaves the whole bank
// unchanged. A no-op unless config.specificity_boost is set.
HypothesisBank boost_specificity(const HypothesisBank& bank, const TaskContext& task, Gateway& gateway,
                                 const EngineConfig& config);

}  // namespace hypogen
