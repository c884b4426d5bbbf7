#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hypogen {

// Failure classes. The CLI maps each one to its own exit status.
enum class ErrorKind {
    config,        // bad task config, template registry, or flag combination
    input,         // malformed dataset, corpus, bank, or fixture files
    precondition,  // an operation was called outside its contract
    gateway,       // model call failed (transport, retry budget, replay miss)
    parse,         // model output could not be turned into a structured value
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& message) : Error(ErrorKind::config, message) {}
};

struct InputError : Error {
    explicit InputError(const std::string& message) : Error(ErrorKind::input, message) {}
};

struct PreconditionError : Error {
    explicit PreconditionError(const std::string& message)
        : Error(ErrorKind::precondition, message) {}
};

struct GatewayError : Error {
    explicit GatewayError(const std::string& message) : Error(ErrorKind::gateway, message) {}
};

// Strict replay found no fixture for (fingerprint, next sequence index).
struct ReplayMissError : GatewayError {
    ReplayMissError(std::string fingerprint, std::size_t sequence_index);

    std::string fingerprint;
    std::size_t sequence_index;
};

struct ParseError : Error {
    explicit ParseError(const std::string& message) : Error(ErrorKind::parse, message) {}
};

// Rethrows `error` as the same failure class with `context` prepended.
[[noreturn]] void rethrow_with_context(const Error& error, std::string_view context);

}  // namespace hypogen
