#include <cstdlib>
#include <memory>
#include <mutex>

#include "httplib.h"
#include "hypogen/error.hpp"
#include "hypogen/gateway.hpp"
#include "json.hpp"

namespace hypogen {
namespace {

using nlohmann::json;

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // path prefix without trailing slash
};

ParsedUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("backend base_url lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

bool is_transient_status(int status) { return status == 408 || status == 409 || status == 429 || status >= 500; }

class HttpTransport final : public Transport {
public:
    HttpTransport(const HttpBackendConfig& config, std::string api_key)
        : url_(split_url(config.base_url)), api_key_(std::move(api_key)), timeout_(config.timeout) {}

    TransportResult send(const CompletionRequest& request) override {
        httplib::Client client(url_.origin);
        client.set_connection_timeout(std::chrono::seconds(30));
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);

        json body;
        body["model"] = request.model_id;
        body["messages"] = json::array({
            {{"role", "system"}, {"content", request.system_prompt}},
            {{"role", "user"}, {"content", request.user_prompt}},
        });
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_tokens;

        httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
        auto res = client.Post(url_.path + "/chat/completions", headers, body.dump(), "application/json");
        if (!res) {
            // Timeouts, resets and refused connections all land here.
            return TransportResult::transient_failure("transport error: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            std::string msg = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500);
            return is_transient_status(res->status) ? TransportResult::transient_failure(msg)
                                                    : TransportResult::fatal_failure(msg);
        }
        try {
            auto j = json::parse(res->body);
            const auto& choice = j.at("choices").at(0);
            CompletionResponse r;
            const auto& content = choice.at("message").at("content");
            r.text = content.is_null() ? "" : content.get<std::string>();
            if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
                r.finish_reason = choice["finish_reason"].get<std::string>();
            if (j.contains("usage")) {
                r.usage.prompt = j["usage"].value("prompt_tokens", 0ull);
                r.usage.completion = j["usage"].value("completion_tokens", 0ull);
            }
            return TransportResult::success(std::move(r));
        } catch (const json::exception& e) {
            return TransportResult::fatal_failure(std::string("unexpected response body: ") + e.what());
        }
    }

private:
    ParsedUrl url_;
    std::string api_key_;
    std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(const HttpBackendConfig& config) {
    const char* key = std::getenv(config.api_key_env.c_str());
    if (!key || !*key) throw ConfigError("credential variable " + config.api_key_env + " is not set");
    return std::make_shared<HttpTransport>(config, key);
}

}  // namespace hypogen
