#pragma once

#include <stdexcept>
#include <string>

namespace trajrl {

// Error categories. Values are shared with the C API status codes in
// trajrl.h, so keep the numbering in sync.
enum class ErrorCode : int {
    invalid_argument = 1,
    parse = 2,
    validation = 3,
    config = 4,
    io = 5,
    numeric = 6,
    degenerate_support = 7,
    ambiguous_log = 8,
    checkpoint = 9,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace trajrl
