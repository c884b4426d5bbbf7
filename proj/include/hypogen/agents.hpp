#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hypogen/core.hpp"
#include "hypogen/gateway.hpp"
#include "hypogen/templates.hpp"

namespace hypogen {

// A task spec together with the template registry it binds into.
struct TaskContext {
    TaskSpec spec;
    TemplateRegistry templates;

    RenderedPrompt render(AgentRole role, const RenderContext& context) const {
        return templates.render(spec.template_for(role), context);
    }
};

// One gateway call for a rendered prompt; returns the raw text.
std::string call_model(Gateway& gateway, AgentRole role, const RenderedPrompt& prompt, const EngineConfig& config);

struct HypothesisRequest {
    std::vector<std::string> texts;
    std::size_t attempts = 0;
    bool shortfall = false;
};

// Asks for a numbered list of `expected` hypotheses. A short or unparseable
// first answer is retried once with the same prompt; the longer of the two
// parses wins (ties go to the retry). Throws ParseError when neither attempt
// yields any numbered item.
HypothesisRequest request_hypotheses(Gateway& gateway, AgentRole role, const RenderedPrompt& prompt,
                                     std::size_t expected, const EngineConfig& config);

// Applies `fn` to 0..n-1 with at most `max_in_flight` concurrent calls and
// returns the results in index order. The first exception (lowest index) is
// rethrown after all workers finish.
template <typename Fn>
auto parallel_map(std::size_t n, std::size_t max_in_flight, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using Result = decltype(fn(std::size_t{}));
    std::vector<std::optional<Result>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    const std::size_t workers = std::min(n, std::max<std::size_t>(1, max_in_flight));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n && !failed; i = next++) {
                    try {
                        slots[i].emplace(fn(i));
                    } catch (...) {
                        errors[i] = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<Result> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// Zero-padded counter ids ("h000007") so lexicographic order matches
// creation order.
std::string make_hypothesis_id(char prefix, std::uint64_t counter);

}  // namespace hypogen
