#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hypogen/core.hpp"

namespace hypogen {

struct CompletionRequest {
    std::string model_id;
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 1e-5;
    std::size_t max_tokens = 4000;
    // Bookkeeping for call tallies. Not part of the fingerprint.
    AgentRole role = AgentRole::generator;

    // Throws PreconditionError on empty prompts, negative temperature, or
    // max_tokens == 0.
    void validate() const;
};

struct TokenUsage {
    std::uint64_t prompt = 0;
    std::uint64_t completion = 0;
};

struct CompletionResponse {
    std::string text;
    std::string finish_reason = "stop";
    TokenUsage usage;

    bool truncated() const { return finish_reason == "length"; }
};

// Line endings become "\n" and trailing whitespace is stripped from every
// line, so rendering differences across platforms do not change digests.
std::string canonicalize_prompt(std::string_view text);

// SHA-256 over the canonicalized (model_id, system, user, temperature,
// max_tokens) tuple.
std::string fingerprint(const CompletionRequest& request);

// ---------------------------------------------------------------------------
// Fixtures

struct Fixture {
    std::string fingerprint;
    std::size_t sequence_index = 0;
    std::string response_text;
};

class FixtureStore {
public:
    // Accepts a single .jsonl file or a directory of them. A missing path
    // yields an empty store.
    static FixtureStore load(const std::filesystem::path& path);

    // Throws InputError when (fingerprint, sequence_index) already exists.
    void insert(Fixture fixture);

    std::optional<std::string> find(const std::string& fp, std::size_t index) const;
    std::size_t count(const std::string& fp) const;
    std::size_t size() const { return responses_.size(); }

private:
    std::map<std::pair<std::string, std::size_t>, std::string> responses_;
    std::map<std::string, std::size_t> counts_;
};

std::string fixture_to_line(const Fixture& fixture);

// ---------------------------------------------------------------------------
// Transport

struct TransportResult {
    enum class Status { ok, transient, fatal };

    Status status = Status::ok;
    CompletionResponse response;
    std::string error;

    static TransportResult success(CompletionResponse r) { return {Status::ok, std::move(r), {}}; }
    static TransportResult transient_failure(std::string e) { return {Status::transient, {}, std::move(e)}; }
    static TransportResult fatal_failure(std::string e) { return {Status::fatal, {}, std::move(e)}; }
};

// One remote chat-completion exchange. Implementations classify failures as
// transient (timeouts, resets, throttling, 5xx) or fatal.
class Transport {
public:
    virtual ~Transport() = default;
    virtual TransportResult send(const CompletionRequest& request) = 0;
};

struct RetryPolicy {
    std::size_t max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};

    std::chrono::milliseconds backoff_for(std::size_t retry) const;
};

// ---------------------------------------------------------------------------
// Gateways

class Gateway {
public:
    virtual ~Gateway() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual const std::string& model_id() const = 0;
};

CompletionRequest make_request(const Gateway& gateway, AgentRole role, std::string system_prompt,
                               std::string user_prompt, const EngineConfig& config);

enum class GatewayMode { live, record, replay };
enum class ReplayPolicy { strict, repeat_last };

std::string_view to_string(GatewayMode mode);
GatewayMode parse_gateway_mode(std::string_view text);

using CallTally = std::map<AgentRole, std::size_t>;

struct GatewayOptions {
    GatewayMode mode = GatewayMode::replay;
    std::string model_id;
    std::filesystem::path fixtures;
    // Record mode appends to <fixtures>/<session_name>.jsonl when the
    // fixture path is a directory.
    std::string session_name = "session";
    ReplayPolicy replay_policy = ReplayPolicy::strict;
    RetryPolicy retry;
    std::size_t max_in_flight = 4;
    std::function<void(std::chrono::milliseconds)> sleep;
};

// The single choke point for model calls.
//  live   - transport call with bounded retries
//  record - live call, then the response is appended to the fixture store
//  replay - answers from fixtures only; the transport is never touched
class LlmGateway final : public Gateway {
public:
    LlmGateway(GatewayOptions options, std::shared_ptr<Transport> transport);

    CompletionResponse complete(const CompletionRequest& request) override;
    const std::string& model_id() const override { return options_.model_id; }

    GatewayMode mode() const { return options_.mode; }
    CallTally tally() const;
    std::size_t transport_attempts() const;
    std::filesystem::path record_file() const { return record_path_; }

private:
    CompletionResponse replay(const CompletionRequest& request, const std::string& fp);
    CompletionResponse call_with_retry(const CompletionRequest& request);

    GatewayOptions options_;
    std::shared_ptr<Transport> transport_;
    FixtureStore store_;
    std::filesystem::path record_path_;
    std::ofstream record_out_;

    mutable std::mutex mutex_;
    std::map<std::string, std::size_t> replay_cursor_;
    CallTally tally_;
    std::size_t transport_attempts_ = 0;

    std::mutex slots_mutex_;
    std::condition_variable slots_cv_;
    std::size_t in_flight_ = 0;
};

// Decorator that records every request it forwards. Used for call-count
// assertions and per-role tallies.
class RecordingGateway final : public Gateway {
public:
    explicit RecordingGateway(Gateway& inner) : inner_(inner) {}

    CompletionResponse complete(const CompletionRequest& request) override;
    const std::string& model_id() const override { return inner_.model_id(); }

    std::vector<CompletionRequest> calls() const;
    CallTally tally() const;
    std::size_t count(AgentRole role) const;
    void clear();

private:
    Gateway& inner_;
    mutable std::mutex mutex_;
    std::vector<CompletionRequest> calls_;
};

// ---------------------------------------------------------------------------
// Backends

struct HttpBackendConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{120};
};

// OpenAI-compatible /chat/completions client. Throws ConfigError when the
// credential variable is unset.
std::shared_ptr<Transport> make_http_transport(const HttpBackendConfig& config);

// Offline rule-based responder used for demos and for producing bundled
// fixtures. It reads the agent role off the request and answers in the
// shape each prompt asks for. `lexicon` maps label -> cue words.
struct MockBackendConfig {
    std::vector<std::string> labels;
    std::vector<std::pair<std::string, std::vector<std::string>>> lexicon;
    std::string subject = "texts";
};

std::shared_ptr<Transport> make_mock_transport(MockBackendConfig config);

// Transport that fails every call. Useful to prove replay never reaches it.
std::shared_ptr<Transport> make_failing_transport();

}  // namespace hypogen
