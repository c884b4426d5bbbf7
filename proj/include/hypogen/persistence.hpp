#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hypogen/core.hpp"
#include "hypogen/evaluation.hpp"
#include "hypogen/gateway.hpp"
#include "hypogen/literature.hpp"
#include "json.hpp"

namespace hypogen {

inline constexpr const char* kBankFormat = "hypogen.bank/1";

struct BankFile {
    HypothesisBank bank;
    std::string generation_backend;
    std::uint64_t final_t = 0;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    // Method-specific extras (refinement traces, union picks, ...).
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

nlohmann::ordered_json bank_to_json(const BankFile& file);
// Validates every record and names the offending one on failure.
BankFile bank_from_json(const nlohmann::ordered_json& j, const std::string& origin = "bank");

void persist_bank(const BankFile& file, const std::filesystem::path& path);
BankFile load_bank(const std::filesystem::path& path);

void persist_papers(const std::vector<PaperDoc>& papers, const std::filesystem::path& path);
std::vector<PaperDoc> load_papers(const std::filesystem::path& path);

void persist_summaries(const std::vector<PaperSummary>& summaries, const std::filesystem::path& path);
std::vector<PaperSummary> load_summaries(const std::filesystem::path& path);

nlohmann::ordered_json report_to_json(const MetricsReport& report);
void persist_report(const MetricsReport& report, const std::filesystem::path& path);

// Pretty-printed JSON with a trailing newline, written in one go.
void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path);
nlohmann::ordered_json read_json(const std::filesystem::path& path);

struct ArtifactRef {
    std::string role;  // e.g. "train", "bank", "fixtures"
    std::filesystem::path path;
};

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<std::string> backends;
    std::string mode;
    std::vector<ArtifactRef> inputs;
    std::vector<ArtifactRef> outputs;
    std::vector<std::uint64_t> seeds;
    std::string started_at;
    std::string finished_at;
    CallTally tally;
};

// Hashes every listed input and output (directories hash their sorted
// files) and writes <out>.manifest.json next to the primary output.
std::filesystem::path persist_manifest(const RunManifest& manifest, const std::filesystem::path& primary_output);

std::string utc_timestamp();

}  // namespace hypogen
