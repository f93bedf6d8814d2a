#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aeromtl {

/// Error categories. The numeric value doubles as the CLI exit code.
enum class ErrorCode : int {
    invalid_argument = 2,
    shape = 3,
    unsupported = 4,
    degenerate_loss = 5,
    training_diverged = 6,
    config = 7,
    parse = 8,
    data = 9,
    empty_evaluation = 10,
    corrupt_checkpoint = 11,
    io = 12,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace aeromtl
