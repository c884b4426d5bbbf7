#pragma once

// Scripted training scenarios: every model answer is fixed in advance by a
// hash of (salt, hypothesis text, example id), so the engine can be checked
// against a straight-line reference of the update loop that never touches
// the engine code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "hypogen/core.hpp"
#include "hypogen/gateway.hpp"

namespace hypogen::testing {

inline std::uint64_t fnv1a(std::uint64_t salt, const std::string& a, const std::string& b = {}) {
    std::uint64_t h = 1469598103934665603ULL ^ salt;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    };
    mix(a);
    mix(b);
    return h;
}

enum class Outcome { correct, wrong, garbage };

struct Scenario {
    EngineConfig config;
    std::vector<LabeledExample> examples;
    std::uint64_t salt = 0;
    bool short_first_answers = false;  // some generation events answer short, then fully on retry

    Outcome outcome(const std::string& hypothesis, const std::string& example_id) const {
        const double skill = 0.15 + 0.8 * static_cast<double>(fnv1a(salt, hypothesis) % 1000) / 1000.0;
        const std::uint64_t h = fnv1a(salt + 1, hypothesis, example_id);
        if (h % 97 < 3) return Outcome::garbage;
        return static_cast<double>((h >> 8) % 1000) / 1000.0 < skill ? Outcome::correct : Outcome::wrong;
    }

    // Texts produced by the event-th generation call (0 is initialization).
    std::vector<std::string> generation(std::size_t event, std::size_t n) const {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i)
            out.push_back("pattern " + std::to_string(event) + "." + std::to_string(i + 1));
        return out;
    }

    std::string other_label(const std::string& label) const { return label == "positive" ? "negative" : "positive"; }
};

inline Scenario random_scenario(std::mt19937_64& rng) {
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
    };
    Scenario s;
    s.salt = rng();
    EngineConfig& c = s.config;
    c.capacity = pick(1, 8);
    c.k = pick(1, c.capacity);
    c.w_hyp = pick(1, c.k);
    c.w_max = pick(1, 6);
    c.num_init = pick(1, 8);
    c.init_hypotheses = pick(1, 8);
    c.num_per_update = pick(1, 6);
    c.alpha = static_cast<double>(rng() % 2001) / 1000.0;
    c.t_includes_init = rng() % 4 != 0;
    c.max_in_flight = rng() % 2 ? 1 : 3;
    c.refine_rounds = 6;
    s.short_first_answers = rng() % 2;
    const std::size_t n = pick(c.num_init, 50);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = "ex" + std::to_string(i + 1);
        s.examples.push_back(LabeledExample{id, {{"text", id}}, rng() % 2 ? "positive" : "negative"});
    }
    return s;
}

// Model stand-in for the synthetic task templates. Generation answers come
// from Scenario::generation in order of first appearance of each distinct
// prompt; inference answers follow Scenario::outcome.
class ScenarioResponder {
public:
    explicit ScenarioResponder(const Scenario& s) : s_(s) {
        for (const auto& e : s.examples) gold_[e.id] = e.label;
    }

    std::string operator()(const CompletionRequest& r) {
        switch (r.role) {
            case AgentRole::generator:
            case AgentRole::joint_generator: return generate(r);
            case AgentRole::refiner_data:
            case AgentRole::refiner_literature: return refine(r);
            case AgentRole::inference: return infer(r);
            default: return "unsupported role";
        }
    }

private:
    static std::size_t requested(const std::string& prompt) {
        static const std::regex re(R"(Propose (\d+) )");
        std::smatch m;
        return std::regex_search(prompt, m, re) ? std::stoul(m[1].str()) : 0;
    }

    static std::string numbered(const std::vector<std::string>& texts) {
        std::string out = "Proposed hypotheses:\n";
        for (std::size_t i = 0; i < texts.size(); ++i) out += std::to_string(i + 1) + ". " + texts[i] + "\n";
        return out;
    }

    std::string generate(const CompletionRequest& r) {
        std::size_t event = 0, attempt = 0;
        {
            std::lock_guard lock(mutex_);
            auto [it, fresh] = events_.try_emplace(r.user_prompt, events_.size());
            event = it->second;
            attempt = attempts_[r.user_prompt]++;
            (void)fresh;
        }
        auto texts = s_.generation(event, requested(r.user_prompt));
        if (s_.short_first_answers && attempt == 0 && event % 3 == 1 && texts.size() > 1) texts.resize(texts.size() / 2);
        return numbered(texts);
    }

    // Identity refinement: the previous hypotheses come back unchanged.
    std::string refine(const CompletionRequest& r) {
        const std::string& p = r.user_prompt;
        const auto start = p.find("Here are the previous hypotheses:\n");
        const auto end = p.find("\n\nPropose", start);
        if (start == std::string::npos || end == std::string::npos) return "no hypotheses found";
        const auto from = start + std::string("Here are the previous hypotheses:\n").size();
        return "Refined hypotheses:\n" + p.substr(from, end - from) + "\n";
    }

    std::string infer(const CompletionRequest& r) {
        static const std::regex re(R"(Learned pattern: ([^\n]*)\nText: ([^\n]*))");
        std::smatch m;
        if (!std::regex_search(r.user_prompt, m, re)) return "no pattern";
        const std::string hyp = m[1].str();
        const std::string id = m[2].str();
        const std::string& gold = gold_.at(id);
        switch (s_.outcome(hyp, id)) {
            case Outcome::correct: return "The pattern applies.\nFinal answer: " + gold;
            case Outcome::wrong: return "The pattern applies.\nFinal answer: " + s_.other_label(gold);
            case Outcome::garbage: return "I am not sure about this one.";
        }
        return {};
    }

    const Scenario& s_;
    std::map<std::string, std::string> gold_;
    std::mutex mutex_;
    std::map<std::string, std::size_t> events_;
    std::map<std::string, std::size_t> attempts_;
};

// ---------------------------------------------------------------------------
// Straight-line reference of the online loop.

struct SimEntry {
    std::string id;
    std::string text;
    std::uint64_t created = 0;
    std::uint64_t right = 0;
    std::uint64_t seen = 0;

    friend bool operator==(const SimEntry&, const SimEntry&) = default;
};

struct SimSnapshot {
    std::vector<SimEntry> bank;
    std::vector<std::string> pool;
    std::uint64_t t = 0;

    friend bool operator==(const SimSnapshot&, const SimSnapshot&) = default;
};

inline SimSnapshot snapshot_of(const HypothesisBank& bank, const std::vector<LabeledExample>& pool, std::uint64_t t) {
    SimSnapshot s;
    for (const auto& e : bank.entries())
        s.bank.push_back({e.hypothesis.id, e.hypothesis.text, e.hypothesis.created_at_step, e.reward.n_correct,
                          e.reward.n_seen});
    for (const auto& e : pool) s.pool.push_back(e.id);
    s.t = t;
    return s;
}

// One snapshot after initialization and one after every later example.
inline std::vector<SimSnapshot> simulate(const Scenario& s) {
    const EngineConfig& c = s.config;
    const std::size_t w_hyp = c.w_hyp ? *c.w_hyp : (c.k + 1) / 2;
    const std::size_t n_init_hyps = c.init_hypotheses ? *c.init_hypotheses : c.capacity;

    auto score = [&](const SimEntry& e, std::uint64_t t) {
        const double n = static_cast<double>(e.seen);
        return static_cast<double>(e.right) / n + c.alpha * std::sqrt(std::log(static_cast<double>(t)) / n);
    };
    auto rank = [&](std::vector<SimEntry>& bank, std::uint64_t t) {
        const std::uint64_t tt = t == 0 ? 1 : t;
        std::stable_sort(bank.begin(), bank.end(), [&](const SimEntry& a, const SimEntry& b) {
            const double ra = score(a, tt), rb = score(b, tt);
            if (ra != rb) return ra > rb;
            if (a.created != b.created) return a.created < b.created;
            return a.id < b.id;
        });
    };
    auto right = [&](const std::string& text, const LabeledExample& ex) {
        return s.outcome(text, ex.id) == Outcome::correct;
    };
    std::uint64_t counter = 0;
    auto next_id = [&] {
        char buf[16];
        std::snprintf(buf, sizeof buf, "h%06llu", static_cast<unsigned long long>(++counter));
        return std::string(buf);
    };

    std::vector<SimSnapshot> out;
    std::vector<SimEntry> bank;
    for (const auto& text : s.generation(0, n_init_hyps)) {
        SimEntry e{next_id(), text, 0, 0, 0};
        for (std::size_t i = 0; i < c.num_init; ++i) {
            e.seen += 1;
            e.right += right(text, s.examples[i]);
        }
        bank.push_back(e);
    }
    std::uint64_t t = c.t_includes_init ? c.num_init : 0;
    rank(bank, t);
    if (bank.size() > c.capacity) bank.resize(c.capacity);
    std::vector<LabeledExample> pool;
    out.push_back({bank, {}, t});

    std::size_t event = 0;
    for (std::size_t i = c.num_init; i < s.examples.size(); ++i) {
        const LabeledExample& ex = s.examples[i];
        const std::size_t k = std::min(c.k, bank.size());
        std::size_t wrong = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const bool ok = right(bank[j].text, ex);
            bank[j].seen += 1;
            bank[j].right += ok;
            wrong += !ok;
        }
        t += 1;
        if (wrong >= w_hyp) pool.push_back(ex);
        if (pool.size() >= c.w_max) {
            ++event;
            for (const auto& text : s.generation(event, c.num_per_update)) {
                SimEntry e{next_id(), text, t, 0, 0};
                for (const auto& p : pool) {
                    e.seen += 1;
                    e.right += right(text, p);
                }
                bank.push_back(e);
            }
            rank(bank, t);
            if (bank.size() > c.capacity) bank.resize(c.capacity);
            pool.clear();
        } else {
            rank(bank, t);
        }
        std::vector<std::string> pool_ids;
        for (const auto& p : pool) pool_ids.push_back(p.id);
        out.push_back({bank, pool_ids, t});
    }
    return out;
}

}  // namespace hypogen::testing
