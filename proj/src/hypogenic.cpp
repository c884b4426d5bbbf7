#include "hypogen/hypogenic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hypogen/error.hpp"
#include "hypogen/log.hpp"

namespace hypogen {

double compute_reward(const RewardState& state, std::uint64_t t, double alpha) {
    if (state.n_seen == 0) throw PreconditionError("reward undefined: hypothesis has no trials");
    if (t == 0) throw PreconditionError("reward undefined at t = 0");
    const double n = static_cast<double>(state.n_seen);
    return static_cast<double>(state.n_correct) / n + alpha * std::sqrt(std::log(static_cast<double>(t)) / n);
}

bool WrongExamplePool::contains(const std::string& id) const {
    return std::any_of(examples_.begin(), examples_.end(), [&](const auto& e) { return e.id == id; });
}

void WrongExamplePool::add(LabeledExample example) {
    if (full()) throw PreconditionError("wrong-example pool is full");
    if (contains(example.id)) throw PreconditionError("example '" + example.id + "' is already pooled");
    examples_.push_back(std::move(example));
}

void sort_bank_by_reward(HypothesisBank& bank, std::uint64_t t, double alpha) {
    const std::uint64_t tt = std::max<std::uint64_t>(t, 1);
    std::vector<double> reward(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i)
        reward[i] = bank[i].reward.n_seen == 0 ? std::numeric_limits<double>::infinity()
                                               : compute_reward(bank[i].reward, tt, alpha);
    std::vector<std::size_t> order(bank.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (reward[a] != reward[b]) return reward[a] > reward[b];
        const auto& ha = bank[a].hypothesis;
        const auto& hb = bank[b].hypothesis;
        if (ha.created_at_step != hb.created_at_step) return ha.created_at_step < hb.created_at_step;
        return ha.id < hb.id;
    });
    bank.reorder(order);
}

namespace {

HypothesisBank capped(const HypothesisBank& sorted, std::size_t capacity) {
    HypothesisBank out(capacity);
    for (std::size_t i = 0; i < sorted.size() && i < capacity; ++i) out.add(sorted[i]);
    return out;
}

}  // namespace

SinglePrediction evaluate_hypothesis_on_example(const Hypothesis& hypothesis, const LabeledExample& example,
                                                const TaskContext& task, Gateway& gateway,
                                                const EngineConfig& config) {
    RenderContext ctx;
    bind_instance(ctx, task.spec, example);
    ctx.set("hypothesis", hypothesis.text);
    SinglePrediction p;
    p.raw_text = call_model(gateway, AgentRole::inference, task.render(AgentRole::inference, ctx), config);
    try {
        p.predicted = parse_final_answer(p.raw_text, task.spec.label_set);
    } catch (const ParseError& e) {
        log::warn("inference for hypothesis " + hypothesis.id + " on example " + example.id +
                  " did not parse, counted as wrong: " + e.what());
        return p;
    }
    auto gold = task.spec.canonical_label(example.label);
    p.correct = gold && *gold == *p.predicted;
    return p;
}

std::vector<RewardState> score_on_examples(const std::vector<Hypothesis>& hypotheses,
                                           const std::vector<LabeledExample>& examples, const TaskContext& task,
                                           Gateway& gateway, const EngineConfig& config) {
    const std::size_t m = examples.size();
    auto outcomes = parallel_map(hypotheses.size() * m, config.max_in_flight, [&](std::size_t cell) {
        return evaluate_hypothesis_on_example(hypotheses[cell / m], examples[cell % m], task, gateway, config).correct;
    });
    std::vector<RewardState> rewards(hypotheses.size());
    for (std::size_t cell = 0; cell < outcomes.size(); ++cell) rewards[cell / m].record(outcomes[cell]);
    return rewards;
}

TrainingState seed_training_state(const std::vector<std::string>& texts, Provenance provenance, const Dataset& init,
                                  const TaskContext& task, Gateway& gateway, const EngineConfig& config) {
    TrainingState state{HypothesisBank(config.capacity), WrongExamplePool(config.w_max), 0, 0, 1, config, {}};
    std::vector<Hypothesis> hyps;
    for (const auto& text : texts)
        hyps.push_back(Hypothesis{make_hypothesis_id('h', state.next_id++), text, provenance, 0});
    auto rewards = score_on_examples(hyps, init.examples, task, gateway, config);

    HypothesisBank all(std::max<std::size_t>(hyps.size(), 1));
    for (std::size_t i = 0; i < hyps.size(); ++i) all.add({hyps[i], rewards[i]});
    state.t = config.t_includes_init ? init.size() : 0;
    sort_bank_by_reward(all, state.t, config.alpha);
    if (all.size() > config.capacity)
        log::info("initial bank of " + std::to_string(all.size()) + " capped to " + std::to_string(config.capacity));
    state.bank = capped(all, config.capacity);
    return state;
}

TrainingState initialize_bank(const Dataset& init, const TaskContext& task, Gateway& gateway,
                              const EngineConfig& config) {
    if (init.size() != config.num_init)
        throw PreconditionError("initialization needs exactly " + std::to_string(config.num_init) +
                                " examples, got " + std::to_string(init.size()));
    const std::size_t n = config.effective_init_hypotheses();
    RenderContext ctx;
    ctx.set("num_hypotheses", n).set("examples", format_examples(task.templates, task.spec, init.examples));
    auto result = request_hypotheses(gateway, AgentRole::generator, task.render(AgentRole::generator, ctx), n, config);
    return seed_training_state(result.texts, Provenance::data, init, task, gateway, config);
}

std::vector<Hypothesis> generate_from_wrong(const WrongExamplePool& pool, TrainingState& state,
                                            const TaskContext& task, Gateway& gateway) {
    if (pool.empty()) throw PreconditionError("regeneration needs a nonempty wrong-example pool");
    const EngineConfig& config = state.config;
    RenderContext ctx;
    ctx.set("num_hypotheses", config.num_per_update)
        .set("examples", format_examples(task.templates, task.spec, pool.examples()));
    std::vector<std::string> texts;
    try {
        texts = request_hypotheses(gateway, AgentRole::generator, task.render(AgentRole::generator, ctx),
                                   config.num_per_update, config)
                    .texts;
    } catch (const ParseError& e) {
        log::error(std::string("regeneration produced no hypotheses, pool discarded: ") + e.what());
        return {};
    }
    std::vector<Hypothesis> out;
    for (auto& text : texts)
        out.push_back(Hypothesis{make_hypothesis_id('h', state.next_id++), std::move(text), Provenance::data, state.t});
    return out;
}

std::vector<BankEntry> regenerate_from_wrong(const WrongExamplePool& pool, TrainingState& state,
                                             const TaskContext& task, Gateway& gateway,
                                             const RegenerationHook& hook) {
    std::vector<Hypothesis> batch = generate_from_wrong(pool, state, task, gateway);
    if (!batch.empty() && hook) batch = hook(std::move(batch), pool);
    auto rewards = score_on_examples(batch, pool.examples(), task, gateway, state.config);
    std::vector<BankEntry> out;
    for (std::size_t i = 0; i < batch.size(); ++i) out.push_back({std::move(batch[i]), rewards[i]});
    return out;
}

TrainingState update_step(const TrainingState& state, const LabeledExample& example, const TaskContext& task,
                          Gateway& gateway, const RegenerationHook& hook) {
    if (state.bank.empty()) throw PreconditionError("update step needs a nonempty bank");
    const EngineConfig& config = state.config;
    TrainingState next = state;
    next.last_step = StepReport{};
    next.last_step.example_id = example.id;

    sort_bank_by_reward(next.bank, next.t, config.alpha);
    const std::size_t k = std::min(config.k, next.bank.size());
    std::vector<Hypothesis> consulted;
    for (std::size_t i = 0; i < k; ++i) {
        consulted.push_back(next.bank[i].hypothesis);
        next.last_step.consulted_ids.push_back(next.bank[i].hypothesis.id);
    }
    auto outcomes = parallel_map(k, config.max_in_flight, [&](std::size_t i) {
        return evaluate_hypothesis_on_example(consulted[i], example, task, gateway, config).correct;
    });
    for (std::size_t i = 0; i < k; ++i) {
        RewardState r = next.bank[i].reward;
        r.record(outcomes[i]);
        next.bank.set_reward(i, r);
        if (!outcomes[i]) ++next.last_step.wrong_count;
    }
    next.t += 1;
    next.update_steps += 1;

    if (next.last_step.wrong_count >= config.effective_w_hyp() && !next.wrong_pool.contains(example.id)) {
        next.wrong_pool.add(example);
        next.last_step.entered_pool = true;
    }

    if (next.wrong_pool.size() >= config.w_max) {
        auto fresh = regenerate_from_wrong(next.wrong_pool, next, task, gateway, hook);
        next.last_step.regenerated = true;
        next.last_step.regeneration_failed = fresh.empty();
        HypothesisBank merged(next.bank.size() + fresh.size());
        for (const auto& e : next.bank.entries()) merged.add(e);
        for (auto& e : fresh) {
            next.last_step.new_ids.push_back(e.hypothesis.id);
            merged.add(std::move(e));
        }
        sort_bank_by_reward(merged, next.t, config.alpha);
        next.bank = capped(merged, config.capacity);
        next.wrong_pool.clear();
    } else {
        sort_bank_by_reward(next.bank, next.t, config.alpha);
    }
    return next;
}

TrainingState run_training(const Dataset& train, const TaskContext& task, Gateway& gateway,
                           const EngineConfig& config, const TrainingOptions& options) {
    config.validate();
    if (train.size() < config.num_init)
        throw PreconditionError("training set has " + std::to_string(train.size()) + " examples, fewer than num_init=" +
                                std::to_string(config.num_init));
    Dataset init{std::vector<LabeledExample>(train.examples.begin(), train.examples.begin() + config.num_init),
                 train.split};

    TrainingState state;
    try {
        state = options.initializer ? options.initializer(init) : initialize_bank(init, task, gateway, config);
    } catch (const Error& e) {
        rethrow_with_context(e, "initialization");
    }
    if (options.observer) options.observer(state);

    for (std::size_t i = config.num_init; i < train.size(); ++i) {
        try {
            state = update_step(state, train.examples[i], task, gateway, options.hook);
        } catch (const Error& e) {
            rethrow_with_context(e, "update step " + std::to_string(i - config.num_init + 1) + " (example '" +
                                        train.examples[i].id + "')");
        }
        if (options.observer) options.observer(state);
    }
    return state;
}

}  // namespace hypogen
