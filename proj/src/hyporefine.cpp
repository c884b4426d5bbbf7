#include "hypogen/hyporefine.hpp"

#include "hypogen/error.hpp"
#include "hypogen/log.hpp"

namespace hypogen {

std::string_view to_string(RefineContext kind) {
    return kind == RefineContext::data ? "data" : "literature";
}

RefineContext context_for_round(std::size_t round, RefineStart first) {
    const bool odd = round % 2 == 1;
    if (first == RefineStart::data) return odd ? RefineContext::data : RefineContext::literature;
    return odd ? RefineContext::literature : RefineContext::data;
}

TrainingState initialize_joint(const std::vector<PaperSummary>& summaries, const Dataset& init,
                               const TaskContext& task, Gateway& gateway, const EngineConfig& config) {
    if (summaries.empty()) throw PreconditionError("joint initialization needs at least one summary");
    if (init.size() != config.num_init)
        throw PreconditionError("initialization needs exactly " + std::to_string(config.num_init) +
                                " examples, got " + std::to_string(init.size()));
    const std::size_t n = config.effective_init_hypotheses();
    RenderContext ctx;
    ctx.set("num_hypotheses", n)
        .set("summaries", format_summaries(summaries))
        .set("examples", format_examples(task.templates, task.spec, init.examples));
    auto result =
        request_hypotheses(gateway, AgentRole::joint_generator, task.render(AgentRole::joint_generator, ctx), n, config);
    return seed_training_state(result.texts, Provenance::refined, init, task, gateway, config);
}

std::vector<Hypothesis> refine_round(const std::vector<Hypothesis>& hyps, std::size_t round,
                                     const std::vector<PaperSummary>& summaries, const WrongExamplePool& pool,
                                     const TaskContext& task, Gateway& gateway, const EngineConfig& config) {
    if (round < 1) throw PreconditionError("refinement rounds are numbered from 1");
    if (hyps.empty()) throw PreconditionError("refinement needs at least one hypothesis");

    std::vector<std::string> texts;
    for (const auto& h : hyps) texts.push_back(h.text);

    RenderContext ctx;
    ctx.set("num_hypotheses", hyps.size()).set("hypotheses", format_hypothesis_list(texts));
    AgentRole role;
    if (context_for_round(round, config.first_round) == RefineContext::data) {
        if (pool.empty()) throw PreconditionError("data-driven refinement needs a nonempty wrong-example pool");
        role = AgentRole::refiner_data;
        ctx.set("examples", format_examples(task.templates, task.spec, pool.examples()));
    } else {
        if (summaries.empty()) throw PreconditionError("literature-driven refinement needs summaries");
        role = AgentRole::refiner_literature;
        ctx.set("summaries", format_summaries(summaries));
    }
    auto result = request_hypotheses(gateway, role, task.render(role, ctx), hyps.size(), config);

    std::vector<Hypothesis> out;
    for (std::size_t i = 0; i < result.texts.size(); ++i)
        out.push_back(Hypothesis{hyps[i].id, result.texts[i], Provenance::refined, hyps[i].created_at_step});
    return out;
}

RefinedBatch refine_batch(const std::vector<Hypothesis>& hyps, const std::vector<PaperSummary>& summaries,
                          const WrongExamplePool& pool, const TaskContext& task, Gateway& gateway,
                          const EngineConfig& config) {
    RefinedBatch batch{hyps, {}};
    for (std::size_t round = 1; round <= config.refine_rounds; ++round) {
        RefinementRound record;
        record.index = round;
        record.context = context_for_round(round, config.first_round);
        for (const auto& h : batch.hypotheses) record.inputs.push_back(h.text);
        try {
            batch.hypotheses = refine_round(batch.hypotheses, round, summaries, pool, task, gateway, config);
        } catch (const ParseError& e) {
            batch.trace.truncated = true;
            batch.trace.failure = "round " + std::to_string(round) + ": " + e.what();
            log::error("refinement stopped early, keeping round " + std::to_string(round - 1) + " output: " + e.what());
            break;
        }
        for (const auto& h : batch.hypotheses) record.outputs.push_back(h.text);
        batch.trace.rounds.push_back(std::move(record));
    }
    return batch;
}

RefinedTraining run_training_refined(const Dataset& train, const std::vector<PaperSummary>& summaries,
                                     const TaskContext& task, Gateway& gateway, const EngineConfig& config,
                                     std::function<void(const TrainingState&)> observer) {
    if (summaries.empty()) throw PreconditionError("HypoRefine needs paper summaries");
    RefinedTraining result;
    TrainingOptions options;
    options.initializer = [&](const Dataset& init) { return initialize_joint(summaries, init, task, gateway, config); };
    options.hook = [&](std::vector<Hypothesis> batch, const WrongExamplePool& pool) {
        RefinedBatch refined = refine_batch(batch, summaries, pool, task, gateway, config);
        result.traces.push_back(std::move(refined.trace));
        return std::move(refined.hypotheses);
    };
    options.observer = std::move(observer);
    result.state = run_training(train, task, gateway, config, options);
    return result;
}

}  // namespace hypogen
