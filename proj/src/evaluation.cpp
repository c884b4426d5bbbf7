#include "hypogen/evaluation.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "hypogen/error.hpp"
#include "hypogen/log.hpp"

namespace hypogen {

SeedMetrics compute_metrics(const std::vector<std::string>& gold,
                            const std::vector<std::optional<std::string>>& predicted,
                            const std::vector<std::string>& label_set) {
    if (gold.size() != predicted.size()) throw PreconditionError("metrics: gold and predictions differ in length");
    if (label_set.empty()) throw PreconditionError("metrics: empty label set");
    SeedMetrics m;
    m.n = gold.size();
    std::map<std::string, std::size_t> tp, fp, fn;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (!predicted[i]) {
            ++m.parse_failures;
            ++fn[gold[i]];
            continue;
        }
        if (*predicted[i] == gold[i]) {
            ++correct;
            ++tp[gold[i]];
        } else {
            ++fp[*predicted[i]];
            ++fn[gold[i]];
        }
    }
    m.accuracy = m.n ? static_cast<double>(correct) / static_cast<double>(m.n) : 0.0;
    double f1_sum = 0.0;
    for (const auto& label : label_set) {
        ClassMetrics c;
        c.label = label;
        const double t = static_cast<double>(tp[label]);
        const double p = static_cast<double>(fp[label]);
        const double f = static_cast<double>(fn[label]);
        c.support = tp[label] + fn[label];
        c.precision = t + p > 0 ? t / (t + p) : 0.0;
        c.recall = t + f > 0 ? t / (t + f) : 0.0;
        c.f1 = 2 * t + p + f > 0 ? 2 * t / (2 * t + p + f) : 0.0;
        f1_sum += c.f1;
        m.per_class.push_back(std::move(c));
    }
    m.macro_f1 = f1_sum / static_cast<double>(label_set.size());
    return m;
}

namespace {

Prediction finish_prediction(const LabeledExample& example, const TaskContext& task, std::string raw) {
    Prediction p;
    p.example_id = example.id;
    p.gold = task.spec.canonical_label(example.label).value_or(example.label);
    p.raw_text = std::move(raw);
    try {
        p.predicted = parse_final_answer(p.raw_text, task.spec.label_set);
        p.parse_ok = true;
    } catch (const ParseError& e) {
        log::warn("prediction for example " + example.id + " did not parse, counted as wrong: " + e.what());
    }
    return p;
}

}  // namespace

Prediction infer_multi(const HypothesisBank& bank, const LabeledExample& example, const TaskContext& task,
                       Gateway& gateway, const EngineConfig& config) {
    if (bank.empty()) throw PreconditionError("multi-hypothesis inference needs a nonempty bank");
    RenderContext ctx;
    bind_instance(ctx, task.spec, example);
    ctx.set("hypotheses", format_hypothesis_list(bank.texts()));
    return finish_prediction(
        example, task,
        call_model(gateway, AgentRole::multi_inference, task.render(AgentRole::multi_inference, ctx), config));
}

Prediction infer_baseline(const LabeledExample& example, const TaskContext& task,
                          std::span<const LabeledExample> shots, Gateway& gateway, const EngineConfig& config) {
    if (!shots.empty() && shots.size() != config.few_shot_count)
        throw PreconditionError("baseline expects 0 or " + std::to_string(config.few_shot_count) +
                                " demonstrations, got " + std::to_string(shots.size()));
    RenderContext ctx;
    bind_instance(ctx, task.spec, example);
    ctx.set("demonstrations", shots.empty() ? std::string() : format_examples(task.templates, task.spec, shots));
    return finish_prediction(example, task,
                             call_model(gateway, AgentRole::baseline, task.render(AgentRole::baseline, ctx), config));
}

HypothesisBank zero_shot_generate(const TaskContext& task, std::size_t n, Gateway& gateway,
                                  const EngineConfig& config) {
    if (n == 0) throw PreconditionError("zero-shot generation needs n >= 1");
    RenderContext ctx;
    ctx.set("num_hypotheses", n);
    auto result = request_hypotheses(gateway, AgentRole::zero_shot_generator,
                                     task.render(AgentRole::zero_shot_generator, ctx), n, config);
    HypothesisBank bank(std::max(n, config.capacity));
    for (std::size_t i = 0; i < result.texts.size(); ++i)
        bank.add({Hypothesis{make_hypothesis_id('Z', i + 1), result.texts[i], Provenance::zero_shot, 0}, {}});
    return bank;
}

std::string_view to_string(InferenceMethod::Kind kind) {
    switch (kind) {
        case InferenceMethod::Kind::hypotheses: return "hypotheses";
        case InferenceMethod::Kind::zero_shot_baseline: return "zero-shot";
        case InferenceMethod::Kind::few_shot_baseline: return "few-shot";
    }
    return "hypotheses";
}

std::vector<LabeledExample> sample_shots(const Dataset& pool, std::size_t count, std::uint64_t seed) {
    if (pool.size() < count)
        throw PreconditionError("shot pool holds " + std::to_string(pool.size()) + " examples, need " +
                                std::to_string(count));
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    SeededRng rng(seed);
    std::vector<LabeledExample> out;
    for (std::size_t d = 0; d < count; ++d) {
        std::size_t j = d + static_cast<std::size_t>(rng.below(idx.size() - d));
        std::swap(idx[d], idx[j]);
        out.push_back(pool.examples[idx[d]]);
    }
    return out;
}

MetricsReport evaluate(const InferenceMethod& method, const Dataset& test, const TaskContext& task, Gateway& gateway,
                       const EngineConfig& config, const std::vector<std::uint64_t>& seeds) {
    if (test.empty()) throw PreconditionError("evaluation needs a nonempty test set");
    if (seeds.empty()) throw PreconditionError("evaluation needs at least one seed");
    if (method.kind == InferenceMethod::Kind::hypotheses && (!method.bank || method.bank->empty()))
        throw PreconditionError("hypothesis-based evaluation needs a nonempty bank");
    if (method.kind == InferenceMethod::Kind::few_shot_baseline && !method.shot_pool)
        throw PreconditionError("few-shot evaluation needs a shot pool");

    MetricsReport report;
    report.method = std::string(to_string(method.kind));
    report.inference_backend = gateway.model_id();
    report.generation_backend = gateway.model_id();

    for (std::uint64_t seed : seeds) {
        std::vector<LabeledExample> shots;
        if (method.kind == InferenceMethod::Kind::few_shot_baseline)
            shots = sample_shots(*method.shot_pool, config.few_shot_count, seed);
        std::vector<Prediction> preds;
        try {
            preds = parallel_map(test.size(), config.max_in_flight, [&](std::size_t i) {
                const auto& ex = test.examples[i];
                if (method.kind == InferenceMethod::Kind::hypotheses)
                    return infer_multi(*method.bank, ex, task, gateway, config);
                return infer_baseline(ex, task, shots, gateway, config);
            });
        } catch (const Error& e) {
            rethrow_with_context(e, "evaluation seed " + std::to_string(seed) + " after " +
                                        std::to_string(report.per_seed.size()) + " completed seeds");
        }
        std::vector<std::string> gold;
        std::vector<std::optional<std::string>> predicted;
        for (auto& p : preds) {
            p.seed = seed;
            gold.push_back(p.gold);
            predicted.push_back(p.predicted);
        }
        SeedMetrics m = compute_metrics(gold, predicted, task.spec.label_set);
        m.seed = seed;
        report.per_seed.push_back(std::move(m));
        for (auto& p : preds) report.predictions.push_back(std::move(p));
    }
    double acc = 0.0, f1 = 0.0;
    for (const auto& s : report.per_seed) acc += s.accuracy, f1 += s.macro_f1;
    report.mean_accuracy = acc / static_cast<double>(report.per_seed.size());
    report.mean_macro_f1 = f1 / static_cast<double>(report.per_seed.size());
    return report;
}

MetricsReport cross_model_evaluate(const HypothesisBank& bank, const std::string& generation_backend,
                                   Gateway& inference_gateway, const Dataset& test, const TaskContext& task,
                                   const EngineConfig& config, const std::vector<std::uint64_t>& seeds) {
    MetricsReport report = evaluate(InferenceMethod::with_bank(bank), test, task, inference_gateway, config, seeds);
    report.generation_backend = generation_backend;
    return report;
}

}  // namespace hypogen
