#include "hypogen/persistence.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

#include "hypogen/digest.hpp"
#include "hypogen/error.hpp"

namespace hypogen {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void write_json(const ordered_json& j, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw InputError("write failed for " + path.string());
}

ordered_json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    try {
        return ordered_json::parse(in);
    } catch (const ordered_json::exception& e) {
        throw InputError(path.string() + " is not valid JSON: " + e.what());
    }
}

ordered_json bank_to_json(const BankFile& file) {
    ordered_json j;
    j["format"] = kBankFormat;
    j["generation_backend"] = file.generation_backend;
    j["final_t"] = file.final_t;
    j["capacity"] = file.bank.capacity();
    j["config"] = file.config;
    ordered_json list = ordered_json::array();
    for (const auto& e : file.bank.entries()) {
        ordered_json r;
        r["hypothesis_id"] = e.hypothesis.id;
        r["text"] = e.hypothesis.text;
        r["provenance"] = std::string(to_string(e.hypothesis.provenance));
        r["n_correct"] = e.reward.n_correct;
        r["n_seen"] = e.reward.n_seen;
        r["created_at_step"] = e.hypothesis.created_at_step;
        list.push_back(std::move(r));
    }
    j["hypotheses"] = std::move(list);
    for (const auto& [key, value] : file.extra.items()) j[key] = value;
    return j;
}

BankFile bank_from_json(const ordered_json& j, const std::string& origin) {
    auto fail = [&](const std::string& m) -> InputError { return InputError(origin + ": " + m); };
    if (!j.is_object()) throw fail("bank file must be a JSON object");
    if (j.value("format", std::string()) != kBankFormat)
        throw fail("unsupported bank format (expected " + std::string(kBankFormat) + ")");
    if (!j.contains("hypotheses") || !j["hypotheses"].is_array()) throw fail("missing 'hypotheses' list");

    BankFile file;
    std::size_t capacity = 0;
    try {
        file.generation_backend = j.value("generation_backend", std::string());
        file.final_t = j.value("final_t", std::uint64_t{0});
        capacity = j.value("capacity", j["hypotheses"].size());
        if (j.contains("config")) file.config = j["config"];
    } catch (const ordered_json::exception& e) {
        throw fail(std::string("malformed header: ") + e.what());
    }
    if (capacity < j["hypotheses"].size())
        throw fail("capacity " + std::to_string(capacity) + " is below the record count " +
                   std::to_string(j["hypotheses"].size()));
    file.bank = HypothesisBank(std::max<std::size_t>(capacity, 1));

    static const std::set<std::string> known{"format", "generation_backend", "final_t", "capacity", "config",
                                             "hypotheses"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) file.extra[key] = value;

    std::size_t index = 0;
    for (const auto& r : j["hypotheses"]) {
        const std::string where = "record " + std::to_string(index++);
        BankEntry e;
        try {
            e.hypothesis.id = r.at("hypothesis_id").get<std::string>();
            e.hypothesis.text = r.at("text").get<std::string>();
            e.hypothesis.provenance = parse_provenance(r.at("provenance").get<std::string>());
            e.hypothesis.created_at_step = r.value("created_at_step", std::uint64_t{0});
            e.reward.n_correct = r.at("n_correct").get<std::uint64_t>();
            e.reward.n_seen = r.at("n_seen").get<std::uint64_t>();
        } catch (const ordered_json::exception& ex) {
            throw fail(where + ": " + ex.what());
        } catch (const Error& ex) {
            throw fail(where + ": " + ex.what());
        }
        const std::string label = where + " (" + e.hypothesis.id + ")";
        if (e.hypothesis.id.empty()) throw fail(label + ": empty hypothesis_id");
        if (trim(e.hypothesis.text).empty()) throw fail(label + ": empty text");
        if (!e.reward.valid())
            throw fail(label + ": n_correct " + std::to_string(e.reward.n_correct) + " exceeds n_seen " +
                       std::to_string(e.reward.n_seen));
        if (file.bank.find(e.hypothesis.id)) throw fail(label + ": duplicate hypothesis_id");
        file.bank.add(std::move(e));
    }
    return file;
}

void persist_bank(const BankFile& file, const fs::path& path) { write_json(bank_to_json(file), path); }

BankFile load_bank(const fs::path& path) { return bank_from_json(read_json(path), path.string()); }

void persist_papers(const std::vector<PaperDoc>& papers, const fs::path& path) {
    ordered_json list = ordered_json::array();
    for (const auto& p : papers) {
        ordered_json j;
        j["paper_id"] = p.paper_id;
        j["title"] = p.title;
        j["abstract"] = p.abstract;
        ordered_json body = ordered_json::array();
        for (const auto& [h, t] : p.body_sections) body.push_back({{"section", h}, {"text", t}});
        j["body_text"] = std::move(body);
        list.push_back(std::move(j));
    }
    write_json(ordered_json{{"format", "hypogen.papers/1"}, {"papers", std::move(list)}}, path);
}

std::vector<PaperDoc> load_papers(const fs::path& path) {
    ordered_json j = read_json(path);
    std::vector<PaperDoc> out;
    try {
        for (const auto& p : j.at("papers")) {
            PaperDoc d;
            d.paper_id = p.at("paper_id").get<std::string>();
            d.title = p.at("title").get<std::string>();
            d.abstract = p.value("abstract", std::string());
            for (const auto& s : p.at("body_text"))
                d.body_sections.emplace_back(s.at("section").get<std::string>(), s.at("text").get<std::string>());
            if (trim(d.title).empty()) throw InputError(path.string() + ": paper '" + d.paper_id + "' has no title");
            out.push_back(std::move(d));
        }
    } catch (const ordered_json::exception& e) {
        throw InputError(path.string() + ": malformed paper list: " + e.what());
    }
    return out;
}

void persist_summaries(const std::vector<PaperSummary>& summaries, const fs::path& path) {
    ordered_json list = ordered_json::array();
    for (const auto& s : summaries)
        list.push_back({{"paper_id", s.paper_id}, {"title", s.title}, {"summary_text", s.summary_text}});
    write_json(ordered_json{{"format", "hypogen.summaries/1"}, {"summaries", std::move(list)}}, path);
}

std::vector<PaperSummary> load_summaries(const fs::path& path) {
    ordered_json j = read_json(path);
    std::vector<PaperSummary> out;
    try {
        std::size_t i = 0;
        for (const auto& s : j.at("summaries")) {
            PaperSummary p{s.at("paper_id").get<std::string>(), s.value("title", std::string()),
                           s.at("summary_text").get<std::string>()};
            if (trim(p.summary_text).empty())
                throw InputError(path.string() + ": summary " + std::to_string(i) + " is empty");
            out.push_back(std::move(p));
            ++i;
        }
    } catch (const ordered_json::exception& e) {
        throw InputError(path.string() + ": malformed summaries: " + e.what());
    }
    return out;
}

ordered_json report_to_json(const MetricsReport& r) {
    ordered_json j;
    j["format"] = "hypogen.report/1";
    j["method"] = r.method;
    j["generation_backend"] = r.generation_backend;
    j["inference_backend"] = r.inference_backend;
    j["mean_accuracy"] = r.mean_accuracy;
    j["mean_macro_f1"] = r.mean_macro_f1;
    ordered_json rows = ordered_json::array();
    for (const auto& s : r.per_seed) {
        ordered_json row;
        row["seed"] = s.seed;
        row["n"] = s.n;
        row["accuracy"] = s.accuracy;
        row["macro_f1"] = s.macro_f1;
        row["parse_failures"] = s.parse_failures;
        ordered_json classes = ordered_json::array();
        for (const auto& c : s.per_class)
            classes.push_back({{"label", c.label},
                               {"precision", c.precision},
                               {"recall", c.recall},
                               {"f1", c.f1},
                               {"support", c.support}});
        row["per_class"] = std::move(classes);
        rows.push_back(std::move(row));
    }
    j["per_seed"] = std::move(rows);
    ordered_json preds = ordered_json::array();
    for (const auto& p : r.predictions) {
        ordered_json row;
        row["seed"] = p.seed;
        row["example_id"] = p.example_id;
        row["gold"] = p.gold;
        row["predicted"] = p.predicted ? ordered_json(*p.predicted) : ordered_json(nullptr);
        row["parse_ok"] = p.parse_ok;
        row["raw_text"] = p.raw_text;
        preds.push_back(std::move(row));
    }
    j["predictions"] = std::move(preds);
    return j;
}

void persist_report(const MetricsReport& report, const fs::path& path) { write_json(report_to_json(report), path); }

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace {

ordered_json describe_artifact(const ArtifactRef& ref) {
    ordered_json j;
    j["role"] = ref.role;
    j["path"] = ref.path.string();
    if (fs::is_regular_file(ref.path)) {
        j["sha256"] = file_sha256(ref.path);
    } else if (fs::is_directory(ref.path)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(ref.path))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        ordered_json list = ordered_json::array();
        for (const auto& f : files)
            list.push_back({{"path", fs::relative(f, ref.path).string()}, {"sha256", file_sha256(f)}});
        j["files"] = std::move(list);
    } else {
        j["sha256"] = nullptr;
    }
    return j;
}

}  // namespace

fs::path persist_manifest(const RunManifest& m, const fs::path& primary_output) {
    ordered_json j;
    j["format"] = "hypogen.manifest/1";
    j["command"] = m.command;
    j["argv"] = m.argv;
    j["mode"] = m.mode;
    j["backends"] = m.backends;
    j["config"] = m.config;
    j["seeds"] = m.seeds;
    ordered_json inputs = ordered_json::array();
    for (const auto& a : m.inputs) inputs.push_back(describe_artifact(a));
    j["inputs"] = std::move(inputs);
    ordered_json outputs = ordered_json::array();
    for (const auto& a : m.outputs) {
        if (!fs::exists(a.path)) throw InputError("manifest output " + a.path.string() + " does not exist");
        outputs.push_back(describe_artifact(a));
    }
    j["outputs"] = std::move(outputs);
    ordered_json tally = ordered_json::object();
    for (const auto& [role, n] : m.tally) tally[std::string(to_string(role))] = n;
    j["gateway_calls"] = std::move(tally);
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;

    fs::path path = primary_output;
    path += ".manifest.json";
    write_json(j, path);
    return path;
}

}  // namespace hypogen
