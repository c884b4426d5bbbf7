#include "hypogen/error.hpp"

namespace hypogen {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::input: return "input";
        case ErrorKind::precondition: return "precondition";
        case ErrorKind::gateway: return "gateway";
        case ErrorKind::parse: return "parse";
    }
    return "unknown";
}

ReplayMissError::ReplayMissError(std::string fp, std::size_t index)
    : GatewayError("replay miss: no fixture for fingerprint " + fp + " at sequence index " +
                   std::to_string(index)),
      fingerprint(std::move(fp)),
      sequence_index(index) {}

void rethrow_with_context(const Error& error, std::string_view context) {
    throw Error(error.kind(), std::string(context) + ": " + error.what());
}

}  // namespace hypogen
