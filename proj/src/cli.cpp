#include "hypogen/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "hypogen/combiner.hpp"
#include "hypogen/dataset_io.hpp"
#include "hypogen/evaluation.hpp"
#include "hypogen/hypogenic.hpp"
#include "hypogen/hyporefine.hpp"
#include "hypogen/literature.hpp"
#include "hypogen/log.hpp"
#include "hypogen/persistence.hpp"
#include "hypogen/run_config.hpp"

namespace hypogen {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return exit_config;
        case ErrorKind::input:
        case ErrorKind::precondition: return exit_input;
        case ErrorKind::gateway: return exit_gateway;
        case ErrorKind::parse: return exit_parse;
    }
    return exit_internal;
}

namespace {

struct CommonFlags {
    std::string task_config;
    std::string backend;
    std::string mode = "replay";
    std::string fixtures;
    std::string replay_policy = "strict";
    std::string out;
    std::optional<std::uint64_t> seed;
    EngineOverrides overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_task) {
    auto* task = cmd->add_option("--task-config", f.task_config, "Task config (YAML)");
    if (needs_task) task->required();
    cmd->add_option("--backend", f.backend, "Backend name from the task config");
    cmd->add_option("--mode", f.mode, "Gateway mode")->check(CLI::IsMember({"live", "record", "replay"}));
    cmd->add_option("--fixtures", f.fixtures, "Fixture file or directory (record/replay)");
    cmd->add_option("--replay-policy", f.replay_policy, "What replay does past the last recorded response")
        ->check(CLI::IsMember({"strict", "repeat-last"}));
    cmd->add_option("--seed", f.seed, "Run seed");
    cmd->add_option("--out", f.out, "Output file")->required();
}

void add_overrides(CLI::App* cmd, EngineOverrides& o) {
    cmd->add_option("--alpha", o.alpha, "Exploration weight of the reward");
    cmd->add_option("--k", o.k, "Hypotheses consulted per example");
    cmd->add_option("--w-max", o.w_max, "Wrong-example pool size that triggers regeneration");
    cmd->add_option("--w-hyp", o.w_hyp, "Wrong predictions needed to pool an example");
    cmd->add_option("--num-init", o.num_init, "Initialization examples");
    cmd->add_option("--max-hypotheses", o.max_hypotheses, "Bank capacity");
    cmd->add_option("--refine-rounds", o.refine_rounds, "Refinement rounds per regeneration");
}

// State shared by the command handlers of one invocation.
class Run {
public:
    Run(std::string command, const std::vector<std::string>& args, CommonFlags& flags)
        : flags_(flags) {
        manifest_.command = std::move(command);
        manifest_.argv = args;
        manifest_.started_at = utc_timestamp();
        manifest_.mode = flags_.mode;
        if (!flags_.task_config.empty()) {
            config_ = load_run_config(flags_.task_config);
            manifest_.inputs.push_back({"task-config", flags_.task_config});
            manifest_.inputs.push_back({"templates", config_->template_path});
            engine_ = config_->engine;
        }
        if (flags_.seed) flags_.overrides.seed = flags_.seed;
        apply_overrides(engine_, flags_.overrides);
        manifest_.seeds = {engine_.seed};
    }

    const RunConfig& config() const {
        if (!config_) throw ConfigError("this command needs --task-config");
        return *config_;
    }
    const EngineConfig& engine() const { return engine_; }
    RunManifest& manifest() { return manifest_; }
    const fs::path out() const { return flags_.out; }

    LlmGateway& gateway() {
        if (!gateway_) gateway_ = open_gateway(flags_.backend, flags_.fixtures, manifest_.command);
        return *gateway_;
    }

    std::unique_ptr<LlmGateway> open_gateway(const std::string& backend_name, const std::string& fixtures,
                                             const std::string& session) {
        const BackendSpec& backend = config().backend(backend_name);
        GatewayOptions options;
        options.mode = parse_gateway_mode(flags_.mode);
        options.model_id = backend.model_id;
        options.fixtures = fixtures;
        options.session_name = session;
        options.replay_policy = flags_.replay_policy == "repeat-last" ? ReplayPolicy::repeat_last : ReplayPolicy::strict;
        options.max_in_flight = engine_.max_in_flight;
        std::shared_ptr<Transport> transport;
        if (options.mode != GatewayMode::replay) transport = make_transport(backend);
        if (options.mode != GatewayMode::live && fixtures.empty())
            throw ConfigError(std::string(to_string(options.mode)) + " mode needs --fixtures");
        auto gw = std::make_unique<LlmGateway>(std::move(options), std::move(transport));
        manifest_.backends.push_back(backend.name + ":" + backend.model_id);
        if (!fixtures.empty() && gw->mode() == GatewayMode::replay) manifest_.inputs.push_back({"fixtures", fixtures});
        gateways_.push_back(gw.get());
        return gw;
    }

    ordered_json config_snapshot() const {
        ordered_json j;
        j["engine"] = engine_to_json(engine_);
        if (config_) j["task"] = task_to_json(config_->task.spec);
        return j;
    }

    void finish(std::vector<ArtifactRef> outputs) {
        manifest_.config = config_snapshot();
        manifest_.outputs = std::move(outputs);
        for (LlmGateway* gw : gateways_) {
            for (const auto& [role, n] : gw->tally()) manifest_.tally[role] += n;
            if (gw->mode() == GatewayMode::record) manifest_.outputs.push_back({"fixtures", gw->record_file()});
        }
        manifest_.finished_at = utc_timestamp();
        persist_manifest(manifest_, flags_.out);
    }

private:
    CommonFlags& flags_;
    std::optional<RunConfig> config_;
    EngineConfig engine_;
    RunManifest manifest_;
    std::unique_ptr<LlmGateway> gateway_;
    std::vector<LlmGateway*> gateways_;
};

Dataset read_split(const std::string& path, const TaskSpec& task, SplitTag tag, RunManifest& manifest,
                   const std::string& role) {
    manifest.inputs.push_back({role, path});
    return load_dataset(path, task, tag);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            seeds.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad seed '" + item + "'");
        }
    }
    if (seeds.empty()) throw ConfigError("--seeds is empty");
    return seeds;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hypothesis generation from literature and data", "hypogen"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string method, train_path, test_path, summaries_path, papers_path, corpus_path, bank_path, main_path,
        literature_path, baseline, shots_path, seeds_text, inference_backend, inference_fixtures, data_path;
    bool dedup = false;
    std::size_t split_train = 0, split_validation = 0, split_test = 0;

    auto* ingest = app.add_subcommand("ingest-literature", "Parse a corpus of structured papers");
    ingest->add_option("--corpus", corpus_path, "Paper file or directory")->required();
    add_common(ingest, flags, false);

    auto* summarize = app.add_subcommand("summarize", "Summarize each paper for the task");
    summarize->add_option("--papers", papers_path, "Output of ingest-literature");
    summarize->add_option("--corpus", corpus_path, "Paper file or directory");
    add_common(summarize, flags, true);

    auto* generate = app.add_subcommand("generate", "Build a hypothesis bank");
    generate->add_option("--method", method, "Generation method")
        ->required()
        ->check(CLI::IsMember({"literature", "zero-shot", "hypogenic", "hyporefine"}));
    generate->add_option("--train", train_path, "Training dataset (JSONL)");
    generate->add_option("--summaries", summaries_path, "Paper summaries");
    add_common(generate, flags, true);
    add_overrides(generate, flags.overrides);

    auto* unite = app.add_subcommand("union", "Combine a data-driven bank with a literature bank");
    unite->add_option("--main", main_path, "Data or refined bank")->required();
    unite->add_option("--literature", literature_path, "Literature bank")->required();
    unite->add_flag("--dedup", dedup, "Remove redundant hypotheses inside each bank first");
    add_common(unite, flags, false);
    unite->add_option("--max-hypotheses", flags.overrides.max_hypotheses, "Union capacity");

    auto* infer = app.add_subcommand("infer", "Predict a test set with a bank under one seed");
    infer->add_option("--bank", bank_path, "Hypothesis bank")->required();
    infer->add_option("--test", test_path, "Test dataset (JSONL)")->required();
    add_common(infer, flags, true);

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a bank or a baseline over several seeds");
    evaluate_cmd->add_option("--bank", bank_path, "Hypothesis bank");
    evaluate_cmd->add_option("--baseline", baseline, "No-hypothesis baseline instead of a bank")
        ->check(CLI::IsMember({"zero-shot", "few-shot"}));
    evaluate_cmd->add_option("--shots", shots_path, "Demonstration pool for the few-shot baseline");
    evaluate_cmd->add_option("--test", test_path, "Test dataset (JSONL)")->required();
    evaluate_cmd->add_option("--seeds", seeds_text, "Comma-separated seeds (default: task config)");
    add_common(evaluate_cmd, flags, true);

    auto* cross = app.add_subcommand("cross-eval", "Evaluate a bank with a different inference backend");
    cross->add_option("--bank", bank_path, "Hypothesis bank")->required();
    cross->add_option("--test", test_path, "Test dataset (JSONL)")->required();
    cross->add_option("--inference-backend", inference_backend, "Backend used for inference")->required();
    cross->add_option("--inference-fixtures", inference_fixtures, "Fixtures of the inference backend");
    cross->add_option("--seeds", seeds_text, "Comma-separated seeds (default: task config)");
    add_common(cross, flags, true);

    auto* split = app.add_subcommand("split-dataset", "Seeded train/validation/test split");
    split->add_option("--data", data_path, "Dataset (JSONL)")->required();
    split->add_option("--train-size", split_train, "Train examples")->required();
    split->add_option("--validation-size", split_validation, "Validation examples");
    split->add_option("--test-size", split_test, "Test examples")->required();
    add_common(split, flags, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string command = chosen->get_name();

    try {
        Run run(command, args, flags);

        if (chosen == ingest) {
            auto papers = ingest_corpus(corpus_path);
            run.manifest().inputs.push_back({"corpus", corpus_path});
            persist_papers(papers, run.out());
            run.finish({{"papers", run.out()}});
            out << "ingested " << papers.size() << " papers -> " << run.out().string() << "\n";
        } else if (chosen == summarize) {
            std::vector<PaperDoc> papers;
            if (!papers_path.empty()) {
                papers = load_papers(papers_path);
                run.manifest().inputs.push_back({"papers", papers_path});
            } else if (!corpus_path.empty()) {
                papers = ingest_corpus(corpus_path);
                run.manifest().inputs.push_back({"corpus", corpus_path});
            } else {
                throw ConfigError("summarize needs --papers or --corpus");
            }
            auto summaries = summarize_corpus(papers, run.config().task, run.gateway(), run.engine());
            persist_summaries(summaries, run.out());
            run.finish({{"summaries", run.out()}});
            out << "summarized " << summaries.size() << " papers -> " << run.out().string() << "\n";
        } else if (chosen == generate) {
            const TaskContext& task = run.config().task;
            const EngineConfig& cfg = run.engine();
            BankFile file;
            std::vector<PaperSummary> summaries;
            if (!summaries_path.empty()) {
                summaries = load_summaries(summaries_path);
                run.manifest().inputs.push_back({"summaries", summaries_path});
            }
            if ((method == "literature" || method == "hyporefine") && summaries.empty())
                throw ConfigError("--method " + method + " needs --summaries with at least one summary");
            if ((method == "hypogenic" || method == "hyporefine") && train_path.empty())
                throw ConfigError("--method " + method + " needs --train");

            if (method == "literature") {
                file.bank = generate_literature_hypotheses(summaries, task, cfg.capacity, run.gateway(), cfg);
                file.bank = boost_specificity(file.bank, task, run.gateway(), cfg);
            } else if (method == "zero-shot") {
                file.bank = zero_shot_generate(task, cfg.capacity, run.gateway(), cfg);
            } else {
                Dataset train = read_split(train_path, task.spec, SplitTag::train, run.manifest(), "train");
                if (method == "hypogenic") {
                    TrainingState st = run_training(train, task, run.gateway(), cfg);
                    file.bank = st.bank;
                    file.final_t = st.t;
                } else {
                    RefinedTraining rt = run_training_refined(train, summaries, task, run.gateway(), cfg);
                    file.bank = rt.state.bank;
                    file.final_t = rt.state.t;
                    ordered_json traces = ordered_json::array();
                    for (const auto& tr : rt.traces) {
                        ordered_json t;
                        t["truncated"] = tr.truncated;
                        t["failure"] = tr.failure;
                        ordered_json rounds = ordered_json::array();
                        for (const auto& r : tr.rounds)
                            rounds.push_back({{"round", r.index},
                                              {"context", std::string(to_string(r.context))},
                                              {"inputs", r.inputs},
                                              {"outputs", r.outputs}});
                        t["rounds"] = std::move(rounds);
                        traces.push_back(std::move(t));
                    }
                    file.extra["refinement_traces"] = std::move(traces);
                }
            }
            file.generation_backend = run.gateway().model_id();
            file.config = run.config_snapshot();
            file.extra["method"] = method;
            persist_bank(file, run.out());
            run.finish({{"bank", run.out()}});
            out << method << ": " << file.bank.size() << " hypotheses -> " << run.out().string() << "\n";
        } else if (chosen == unite) {
            BankFile main_file = load_bank(main_path);
            BankFile lit_file = load_bank(literature_path);
            run.manifest().inputs.push_back({"main-bank", main_path});
            run.manifest().inputs.push_back({"literature-bank", literature_path});
            ordered_json checks = ordered_json::array();
            if (dedup) {
                for (BankFile* f : {&main_file, &lit_file}) {
                    auto rm = redundancy_matrix(f->bank, run.config().task, run.gateway(), run.engine());
                    for (const auto& c : rm.ledger)
                        checks.push_back({{"first", c.first_id},
                                          {"second", c.second_id},
                                          {"redundant", c.redundant},
                                          {"parse_ok", c.parse_ok}});
                    f->bank = deduplicate(f->bank, rm.matrix);
                }
            }
            const std::size_t capacity = run.engine().capacity;
            UnionResult u = union_banks(main_file.bank, lit_file.bank, capacity, run.engine().seed);
            BankFile file;
            file.bank = u.bank;
            file.generation_backend = main_file.generation_backend;
            file.final_t = main_file.final_t;
            file.config = run.config_snapshot();
            file.extra["method"] = "union";
            file.extra["union"] = {{"main_source", main_path},
                                   {"literature_source", literature_path},
                                   {"seed", run.engine().seed},
                                   {"main_prefix", u.main_prefix},
                                   {"literature_ids", u.literature_ids},
                                   {"backfill", u.backfill},
                                   {"deduplicated", dedup},
                                   {"checker_calls", std::move(checks)}};
            persist_bank(file, run.out());
            run.finish({{"bank", run.out()}});
            out << "union: " << file.bank.size() << " hypotheses -> " << run.out().string() << "\n";
        } else if (chosen == infer || chosen == evaluate_cmd || chosen == cross) {
            const TaskContext& task = run.config().task;
            Dataset test = read_split(test_path, task.spec, SplitTag::test_ind, run.manifest(), "test");
            std::vector<std::uint64_t> seeds;
            if (chosen == infer) seeds = {run.engine().seed};
            else if (!seeds_text.empty()) seeds = parse_seed_list(seeds_text);
            else if (flags.seed) seeds = {*flags.seed};
            else seeds = run.config().seeds;
            run.manifest().seeds = seeds;

            MetricsReport report;
            std::optional<BankFile> bank;
            if (!bank_path.empty()) {
                bank = load_bank(bank_path);
                run.manifest().inputs.push_back({"bank", bank_path});
            }
            if (chosen == cross) {
                const std::string fx = inference_fixtures.empty() ? flags.fixtures : inference_fixtures;
                auto inference_gw = run.open_gateway(inference_backend, fx, command);
                report = cross_model_evaluate(bank->bank, bank->generation_backend, *inference_gw, test, task,
                                              run.engine(), seeds);
                persist_report(report, run.out());
                run.finish({{"report", run.out()}});
            } else {
                InferenceMethod m;
                std::optional<Dataset> shots;
                if (chosen == evaluate_cmd && !baseline.empty()) {
                    if (bank) throw ConfigError("--bank and --baseline are mutually exclusive");
                    if (baseline == "few-shot") {
                        if (shots_path.empty()) throw ConfigError("--baseline few-shot needs --shots");
                        shots = read_split(shots_path, task.spec, SplitTag::train, run.manifest(), "shots");
                        m = InferenceMethod::few_shot(*shots);
                    } else {
                        m = InferenceMethod::zero_shot();
                    }
                } else {
                    if (!bank) throw ConfigError(command + " needs --bank or --baseline");
                    m = InferenceMethod::with_bank(bank->bank);
                }
                report = evaluate(m, test, task, run.gateway(), run.engine(), seeds);
                if (bank) report.generation_backend = bank->generation_backend;
                persist_report(report, run.out());
                run.finish({{"report", run.out()}});
            }
            out << report.method << ": accuracy " << report.mean_accuracy << ", macro-F1 " << report.mean_macro_f1
                << " over " << report.per_seed.size() << " seed(s) -> " << run.out().string() << "\n";
        } else if (chosen == split) {
            const TaskSpec& task = run.config().task.spec;
            run.manifest().inputs.push_back({"data", data_path});
            Dataset all = load_dataset(data_path, task);
            DatasetSplits parts =
                split_dataset(all, SplitSizes{split_train, split_validation, split_test}, run.engine().seed);
            const fs::path dir = run.out();
            fs::create_directories(dir);
            write_dataset(dir / "train.jsonl", parts.train);
            std::vector<ArtifactRef> outputs{{"train", dir / "train.jsonl"}};
            if (!parts.validation.empty()) {
                write_dataset(dir / "validation.jsonl", parts.validation);
                outputs.push_back({"validation", dir / "validation.jsonl"});
            }
            write_dataset(dir / "test.jsonl", parts.test);
            outputs.push_back({"test", dir / "test.jsonl"});
            run.finish(std::move(outputs));
            out << "split " << all.size() << " examples -> " << dir.string() << "\n";
        }
        return exit_ok;
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
}

}  // namespace hypogen
