#include "hypogen/log.hpp"

#include <iostream>
#include <mutex>

namespace hypogen::log {
namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

void stderr_sink(Level level, std::string_view message) {
    if (level < Level::warn) return;
    std::cerr << (level == Level::warn ? "warning: " : "error: ") << message << '\n';
}

Sink& current_sink() {
    static Sink sink = stderr_sink;
    return sink;
}

}  // namespace

Sink set_sink(Sink sink) {
    std::lock_guard lock(sink_mutex());
    Sink previous = std::move(current_sink());
    current_sink() = sink ? std::move(sink) : Sink(stderr_sink);
    return previous;
}

void write(Level level, std::string_view message) {
    std::lock_guard lock(sink_mutex());
    current_sink()(level, message);
}

}  // namespace hypogen::log
