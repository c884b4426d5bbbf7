#include "hypogen/agents.hpp"

#include <cstdio>

#include "hypogen/error.hpp"
#include "hypogen/log.hpp"

namespace hypogen {

std::string call_model(Gateway& gateway, AgentRole role, const RenderedPrompt& prompt, const EngineConfig& config) {
    CompletionResponse r = gateway.complete(make_request(gateway, role, prompt.system, prompt.user, config));
    return std::move(r.text);
}

HypothesisRequest request_hypotheses(Gateway& gateway, AgentRole role, const RenderedPrompt& prompt,
                                     std::size_t expected, const EngineConfig& config) {
    if (expected == 0) throw PreconditionError("request_hypotheses: expected count must be >= 1");
    HypothesisRequest out;

    std::optional<ParsedHypotheses> first;
    std::string first_error;
    ++out.attempts;
    try {
        first = parse_hypothesis_list(call_model(gateway, role, prompt, config), expected);
    } catch (const ParseError& e) {
        first_error = e.what();
    }
    if (first && !first->shortfall()) {
        out.texts = std::move(first->items);
        return out;
    }

    ++out.attempts;
    std::optional<ParsedHypotheses> second;
    try {
        second = parse_hypothesis_list(call_model(gateway, role, prompt, config), expected);
    } catch (const ParseError& e) {
        if (!first)
            throw ParseError(std::string(to_string(role)) + ": no numbered hypotheses after retry (" + e.what() + ")");
    }
    const ParsedHypotheses& best = (second && (!first || second->items.size() >= first->items.size())) ? *second : *first;
    out.texts = best.items;
    out.shortfall = best.shortfall();
    if (out.shortfall)
        log::warn(std::string(to_string(role)) + ": got " + std::to_string(out.texts.size()) + " of " +
                  std::to_string(expected) + " hypotheses after retry");
    return out;
}

std::string make_hypothesis_id(char prefix, std::uint64_t counter) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%06llu", prefix, static_cast<unsigned long long>(counter));
    return buf;
}

}  // namespace hypogen
