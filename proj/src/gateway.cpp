#include "hypogen/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

#include "hypogen/digest.hpp"
#include "hypogen/error.hpp"
#include "hypogen/log.hpp"
#include "json.hpp"

namespace hypogen {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

void CompletionRequest::validate() const {
    if (trim(system_prompt).empty() && trim(user_prompt).empty())
        throw PreconditionError("completion request has empty prompts");
    if (trim(user_prompt).empty()) throw PreconditionError("completion request has an empty user prompt");
    if (!(temperature >= 0.0)) throw PreconditionError("completion request temperature must be >= 0");
    if (max_tokens < 1) throw PreconditionError("completion request max_tokens must be >= 1");
}

std::string canonicalize_prompt(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::string line;
    auto flush_line = [&](bool newline) {
        std::size_t end = line.size();
        while (end > 0 && (line[end - 1] == ' ' || line[end - 1] == '\t' || line[end - 1] == '\r' ||
                           line[end - 1] == '\f' || line[end - 1] == '\v'))
            --end;
        out.append(line, 0, end);
        if (newline) out.push_back('\n');
        line.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            flush_line(true);
        } else if (c == '\n') {
            flush_line(true);
        } else {
            line.push_back(c);
        }
    }
    flush_line(false);
    return out;
}

std::string fingerprint(const CompletionRequest& request) {
    char temp[64];
    std::snprintf(temp, sizeof temp, "%.17g", request.temperature);
    ordered_json canonical = ordered_json::array({
        request.model_id,
        canonicalize_prompt(request.system_prompt),
        canonicalize_prompt(request.user_prompt),
        std::string(temp),
        request.max_tokens,
    });
    return sha256_hex(canonical.dump());
}

// ---------------------------------------------------------------------------

namespace {

void load_fixture_file(const fs::path& file, FixtureStore& store) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot read fixture file " + file.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            auto j = ordered_json::parse(line);
            store.insert(Fixture{j.at("fingerprint").get<std::string>(),
                                 j.at("sequence_index").get<std::size_t>(),
                                 j.at("response_text").get<std::string>()});
        } catch (const ordered_json::exception& e) {
            throw InputError(file.string() + ":" + std::to_string(line_no) + ": malformed fixture (" +
                             e.what() + ")");
        } catch (const InputError& e) {
            throw InputError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace

FixtureStore FixtureStore::load(const fs::path& path) {
    FixtureStore store;
    if (path.empty() || !fs::exists(path)) return store;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) load_fixture_file(f, store);
    } else {
        load_fixture_file(path, store);
    }
    return store;
}

void FixtureStore::insert(Fixture fixture) {
    auto key = std::make_pair(fixture.fingerprint, fixture.sequence_index);
    if (responses_.count(key))
        throw InputError("duplicate fixture for fingerprint " + fixture.fingerprint + " at index " +
                         std::to_string(fixture.sequence_index));
    responses_.emplace(std::move(key), std::move(fixture.response_text));
    auto& c = counts_[fixture.fingerprint];
    c = std::max(c, fixture.sequence_index + 1);
}

std::optional<std::string> FixtureStore::find(const std::string& fp, std::size_t index) const {
    auto it = responses_.find({fp, index});
    if (it == responses_.end()) return std::nullopt;
    return it->second;
}

std::size_t FixtureStore::count(const std::string& fp) const {
    auto it = counts_.find(fp);
    return it == counts_.end() ? 0 : it->second;
}

std::string fixture_to_line(const Fixture& fixture) {
    ordered_json j;
    j["fingerprint"] = fixture.fingerprint;
    j["sequence_index"] = fixture.sequence_index;
    j["response_text"] = fixture.response_text;
    return j.dump();
}

// ---------------------------------------------------------------------------

std::chrono::milliseconds RetryPolicy::backoff_for(std::size_t retry) const {
    double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, static_cast<double>(retry));
    ms = std::min(ms, static_cast<double>(max_backoff.count()));
    return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

CompletionRequest make_request(const Gateway& gateway, AgentRole role, std::string system_prompt,
                               std::string user_prompt, const EngineConfig& config) {
    CompletionRequest r;
    r.model_id = gateway.model_id();
    r.system_prompt = std::move(system_prompt);
    r.user_prompt = std::move(user_prompt);
    r.temperature = config.temperature;
    r.max_tokens = config.max_tokens;
    r.role = role;
    return r;
}

std::string_view to_string(GatewayMode mode) {
    switch (mode) {
        case GatewayMode::live: return "live";
        case GatewayMode::record: return "record";
        case GatewayMode::replay: return "replay";
    }
    return "replay";
}

GatewayMode parse_gateway_mode(std::string_view text) {
    for (GatewayMode m : {GatewayMode::live, GatewayMode::record, GatewayMode::replay})
        if (to_string(m) == text) return m;
    throw ConfigError("unknown gateway mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

LlmGateway::LlmGateway(GatewayOptions options, std::shared_ptr<Transport> transport)
    : options_(std::move(options)), transport_(std::move(transport)) {
    if (options_.max_in_flight == 0) options_.max_in_flight = 1;
    if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

    if (options_.mode != GatewayMode::live) {
        if (options_.fixtures.empty())
            throw ConfigError(std::string(to_string(options_.mode)) + " mode needs a fixture path");
        store_ = FixtureStore::load(options_.fixtures);
    }
    if (options_.mode != GatewayMode::replay && !transport_)
        throw ConfigError(std::string(to_string(options_.mode)) + " mode needs a transport");

    if (options_.mode == GatewayMode::record) {
        const fs::path& p = options_.fixtures;
        if (p.extension() == ".jsonl") {
            record_path_ = p;
            if (p.has_parent_path()) fs::create_directories(p.parent_path());
        } else {
            fs::create_directories(p);
            record_path_ = p / (options_.session_name + ".jsonl");
        }
        record_out_.open(record_path_, std::ios::app);
        if (!record_out_) throw InputError("cannot open fixture file " + record_path_.string());
    }
}

CompletionResponse LlmGateway::complete(const CompletionRequest& request) {
    request.validate();
    const std::string fp = fingerprint(request);
    {
        std::lock_guard lock(mutex_);
        ++tally_[request.role];
    }

    if (options_.mode == GatewayMode::replay) return replay(request, fp);

    CompletionResponse response;
    {
        std::unique_lock lock(slots_mutex_);
        slots_cv_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
        ++in_flight_;
    }
    try {
        response = call_with_retry(request);
    } catch (...) {
        std::lock_guard lock(slots_mutex_);
        --in_flight_;
        slots_cv_.notify_one();
        throw;
    }
    {
        std::lock_guard lock(slots_mutex_);
        --in_flight_;
        slots_cv_.notify_one();
    }

    if (options_.mode == GatewayMode::record) {
        std::lock_guard lock(mutex_);
        Fixture f{fp, store_.count(fp), response.text};
        record_out_ << fixture_to_line(f) << '\n';
        record_out_.flush();
        store_.insert(std::move(f));
    }
    return response;
}

CompletionResponse LlmGateway::replay(const CompletionRequest&, const std::string& fp) {
    std::lock_guard lock(mutex_);
    std::size_t& cursor = replay_cursor_[fp];
    std::optional<std::string> text = store_.find(fp, cursor);
    if (!text && options_.replay_policy == ReplayPolicy::repeat_last && store_.count(fp) > 0)
        text = store_.find(fp, store_.count(fp) - 1);
    if (!text) throw ReplayMissError(fp, cursor);
    ++cursor;
    CompletionResponse r;
    r.text = std::move(*text);
    r.finish_reason = "stop";
    return r;
}

CompletionResponse LlmGateway::call_with_retry(const CompletionRequest& request) {
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= options_.retry.max_retries; ++attempt) {
        if (attempt > 0) options_.sleep(options_.retry.backoff_for(attempt - 1));
        {
            std::lock_guard lock(mutex_);
            ++transport_attempts_;
        }
        TransportResult result = transport_->send(request);
        switch (result.status) {
            case TransportResult::Status::ok:
                if (result.response.text.empty() && !result.response.truncated())
                    throw GatewayError("model returned an empty completion (finish_reason=" +
                                       result.response.finish_reason + ")");
                if (result.response.truncated())
                    log::warn("completion truncated by max_tokens for role " +
                              std::string(to_string(request.role)));
                return std::move(result.response);
            case TransportResult::Status::fatal:
                throw GatewayError("remote failure: " + result.error);
            case TransportResult::Status::transient:
                last_error = result.error;
                log::warn("transient failure (attempt " + std::to_string(attempt + 1) + "): " + last_error);
                break;
        }
    }
    throw GatewayError("remote failure after " + std::to_string(options_.retry.max_retries) +
                       " retries: " + last_error);
}

CallTally LlmGateway::tally() const {
    std::lock_guard lock(mutex_);
    return tally_;
}

std::size_t LlmGateway::transport_attempts() const {
    std::lock_guard lock(mutex_);
    return transport_attempts_;
}

// ---------------------------------------------------------------------------

CompletionResponse RecordingGateway::complete(const CompletionRequest& request) {
    {
        std::lock_guard lock(mutex_);
        calls_.push_back(request);
    }
    return inner_.complete(request);
}

std::vector<CompletionRequest> RecordingGateway::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

CallTally RecordingGateway::tally() const {
    std::lock_guard lock(mutex_);
    CallTally t;
    for (const auto& c : calls_) ++t[c.role];
    return t;
}

std::size_t RecordingGateway::count(AgentRole role) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(
        std::count_if(calls_.begin(), calls_.end(), [&](const auto& c) { return c.role == role; }));
}

void RecordingGateway::clear() {
    std::lock_guard lock(mutex_);
    calls_.clear();
}

// ---------------------------------------------------------------------------

namespace {

class FailingTransport final : public Transport {
public:
    TransportResult send(const CompletionRequest&) override {
        throw std::logic_error("network access attempted through the failing transport");
    }
};

}  // namespace

std::shared_ptr<Transport> make_failing_transport() { return std::make_shared<FailingTransport>(); }

}  // namespace hypogen
