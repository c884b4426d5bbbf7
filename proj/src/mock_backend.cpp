#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "hypogen/error.hpp"
#include "hypogen/gateway.hpp"

namespace hypogen {
namespace {

std::size_t count_word(const std::string& lowered_text, const std::string& word) {
    const std::string w = to_lower(word);
    if (w.empty()) return 0;
    std::size_t n = 0;
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    for (std::size_t p = lowered_text.find(w); p != std::string::npos; p = lowered_text.find(w, p + 1)) {
        bool left = p == 0 || !is_word(lowered_text[p - 1]);
        bool right = p + w.size() >= lowered_text.size() || !is_word(lowered_text[p + w.size()]);
        if (left && right) ++n;
    }
    return n;
}

struct CueHypothesis {
    std::string word;
    std::string label;
};

class MockTransport final : public Transport {
public:
    explicit MockTransport(MockBackendConfig config) : config_(std::move(config)) {
        if (config_.labels.empty()) throw ConfigError("mock backend needs at least one label");
        for (const auto& [label, words] : config_.lexicon)
            for (const auto& w : words) cues_.push_back({w, label});
    }

    TransportResult send(const CompletionRequest& request) override {
        const std::string prompt = request.system_prompt + "\n" + request.user_prompt;
        CompletionResponse r;
        switch (request.role) {
            case AgentRole::summarizer: r.text = summarize(prompt); break;
            case AgentRole::generator:
            case AgentRole::literature_generator:
            case AgentRole::joint_generator:
            case AgentRole::zero_shot_generator:
            case AgentRole::refiner_data:
            case AgentRole::refiner_literature: r.text = generate(prompt, request.role); break;
            case AgentRole::inference: r.text = infer_single(request.user_prompt); break;
            case AgentRole::multi_inference: r.text = infer_multi(request.user_prompt); break;
            case AgentRole::baseline: r.text = answer(lexicon_vote(to_lower(request.user_prompt))); break;
            case AgentRole::booster: r.text = boost(request.user_prompt); break;
            case AgentRole::redundancy_checker: r.text = check(request.user_prompt); break;
        }
        r.usage.prompt = prompt.size() / 4;
        r.usage.completion = r.text.size() / 4;
        return TransportResult::success(std::move(r));
    }

private:
    std::string answer(const std::string& label) const { return "Reasoning: cue words considered.\nFinal answer: " + label; }

    std::string other_label(const std::string& label) const {
        for (const auto& l : config_.labels)
            if (!iequals(l, label)) return l;
        return label;
    }

    std::string lexicon_vote(const std::string& lowered) const {
        std::map<std::string, std::size_t> votes;
        for (const auto& c : cues_) votes[c.label] += count_word(lowered, c.word);
        std::string best = config_.labels.front();
        std::size_t best_votes = 0;
        for (const auto& l : config_.labels)
            if (votes[l] > best_votes) best = l, best_votes = votes[l];
        return best;
    }

    std::string phrase(const CueHypothesis& c, std::size_t variant) const {
        static const char* suffix[] = {"", " repeatedly", " early on", " near the end", " more than once"};
        std::string s = config_.subject;
        if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return s + " that mention '" + c.word + "'" + suffix[variant % 5] + " tend to be " + c.label + ".";
    }

    // Cue words in order of first appearance in the prompt, then the rest of
    // the lexicon.
    std::vector<CueHypothesis> ranked_cues(const std::string& prompt) const {
        const std::string lowered = to_lower(prompt);
        std::vector<std::pair<std::size_t, std::size_t>> order;
        for (std::size_t i = 0; i < cues_.size(); ++i) {
            std::size_t pos = lowered.find(to_lower(cues_[i].word));
            order.emplace_back(pos == std::string::npos ? lowered.size() + i : pos, i);
        }
        std::sort(order.begin(), order.end());
        std::vector<CueHypothesis> out;
        for (auto& [pos, i] : order) out.push_back(cues_[i]);
        return out;
    }

    std::string generate(const std::string& prompt, AgentRole role) const {
        static const std::regex count_re(R"((\d+)\s+(?:possible\s+|refined\s+|new\s+|distinct\s+)?hypothes)",
                                         std::regex::icase);
        std::size_t n = 5;
        std::smatch m;
        if (std::regex_search(prompt, m, count_re)) {
            n = std::max<std::size_t>(1, std::stoul(m[1].str()));
        } else {
            // "1. [hypothesis], ... N. [hypothesis]" gives the count away too.
            static const std::regex slot_re(R"((\d+)\.\s*\[hypothesis\])", std::regex::icase);
            for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), slot_re); it != std::sregex_iterator();
                 ++it)
                n = std::max<std::size_t>(1, std::stoul((*it)[1].str()));
        }
        const auto cues = ranked_cues(prompt);
        std::string out = role == AgentRole::refiner_data || role == AgentRole::refiner_literature
                              ? "Here are the refined hypotheses:\n"
                              : "Here are the proposed hypotheses:\n";
        for (std::size_t i = 0; i < n; ++i) {
            std::string line = cues.empty() ? config_.subject + " variant " + std::to_string(i + 1) + " tend to be " +
                                                  config_.labels[i % config_.labels.size()] + "."
                                            : phrase(cues[i % cues.size()], i / cues.size());
            out += std::to_string(i + 1) + ". " + line + "\n";
        }
        return out;
    }

    std::vector<CueHypothesis> extract_hypotheses(const std::string& text) const {
        static const std::regex hyp_re(R"(mention '([^']+)'[^.\n]*? tend to be ([A-Za-z_\-]+))");
        std::vector<CueHypothesis> out;
        for (auto it = std::sregex_iterator(text.begin(), text.end(), hyp_re); it != std::sregex_iterator(); ++it)
            out.push_back({(*it)[1].str(), (*it)[2].str()});
        return out;
    }

    // True when the cue word occurs in the prompt outside its quoted mention.
    static bool cue_present(const std::string& lowered, const std::string& word) {
        std::size_t total = count_word(lowered, word);
        std::size_t in_quotes = 0;
        const std::string q = "'" + to_lower(word) + "'";
        for (std::size_t p = lowered.find(q); p != std::string::npos; p = lowered.find(q, p + 1)) ++in_quotes;
        return total > in_quotes;
    }

    std::string infer_single(const std::string& prompt) const {
        const auto hyps = extract_hypotheses(prompt);
        const std::string lowered = to_lower(prompt);
        if (hyps.empty()) return answer(lexicon_vote(lowered));
        const auto& h = hyps.front();
        return answer(cue_present(lowered, h.word) ? h.label : other_label(h.label));
    }

    std::string infer_multi(const std::string& prompt) const {
        const auto hyps = extract_hypotheses(prompt);
        const std::string lowered = to_lower(prompt);
        std::map<std::string, std::size_t> votes;
        for (const auto& h : hyps)
            if (cue_present(lowered, h.word)) ++votes[to_lower(h.label)];
        std::string best;
        std::size_t best_votes = 0;
        for (const auto& l : config_.labels)
            if (votes[to_lower(l)] > best_votes) best = l, best_votes = votes[to_lower(l)];
        return answer(best.empty() ? lexicon_vote(lowered) : best);
    }

    std::string boost(const std::string& prompt) const {
        const auto hyps = extract_hypotheses(prompt);
        if (hyps.empty()) return "1. " + config_.subject + " with strong cue words tend to be " + config_.labels.front() + ".";
        const auto& h = hyps.front();
        return "1. " + phrase(h, 0).substr(0, phrase(h, 0).size() - 1) + ", for example a sentence such as \"" +
               h.word + " was clear\".";
    }

    std::string check(const std::string& prompt) const {
        static const std::regex quoted(R"('([^']+)')");
        std::vector<std::string> words;
        for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), quoted); it != std::sregex_iterator(); ++it)
            words.push_back(to_lower((*it)[1].str()));
        bool same = words.size() >= 2 && words[0] == words[1];
        return std::string("Both hypotheses were compared.\nFinal answer: ") + (same ? "yes" : "no");
    }

    std::string summarize(const std::string& prompt) const {
        const auto cues = ranked_cues(prompt);
        std::string out = "Key Findings:\n";
        const std::string lowered = to_lower(prompt);
        std::size_t n = 0;
        for (const auto& c : cues) {
            if (n == 3) break;
            if (count_word(lowered, c.word) == 0 && n > 0) break;
            out += "- The study links the word '" + c.word + "' to " + c.label + " " + config_.subject + ".\n";
            ++n;
        }
        if (n == 0) out += "- The study reports no distinctive cue words.\n";
        return out;
    }

    MockBackendConfig config_;
    std::vector<CueHypothesis> cues_;
};

}  // namespace

std::shared_ptr<Transport> make_mock_transport(MockBackendConfig config) {
    return std::make_shared<MockTransport>(std::move(config));
}

}  // namespace hypogen
