#include "aeromtl/errors.hpp"

namespace aeromtl {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::shape: return "shape";
    case ErrorCode::unsupported: return "unsupported-configuration";
    case ErrorCode::degenerate_loss: return "degenerate-loss";
    case ErrorCode::training_diverged: return "training-diverged";
    case ErrorCode::config: return "config";
    case ErrorCode::parse: return "parse";
    case ErrorCode::data: return "data";
    case ErrorCode::empty_evaluation: return "empty-evaluation";
    case ErrorCode::corrupt_checkpoint: return "corrupt-checkpoint";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + " error: " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace aeromtl

#include <iostream>
#include <mutex>

#include "aeromtl/log.hpp"

namespace aeromtl {

namespace {

std::mutex g_log_mutex;

LogSink& sink_ref() {
    static LogSink sink = [](LogLevel level, std::string_view message) {
        std::cerr << (level == LogLevel::warning ? "[warn] " : "[info] ") << message << '\n';
    };
    return sink;
}

}  // namespace

LogSink set_log_sink(LogSink sink) {
    std::lock_guard lock(g_log_mutex);
    std::swap(sink_ref(), sink);
    return sink;
}

void log_message(LogLevel level, std::string_view message) {
    std::lock_guard lock(g_log_mutex);
    if (sink_ref()) sink_ref()(level, message);
}

}  // namespace aeromtl
