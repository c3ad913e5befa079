#pragma once

#include <stdexcept>
#include <string>

namespace qpg {

// Values mirror the qpg_status codes of the C API.
enum class ErrorCode : int {
    ok = 0,
    config = 1,
    capacity = 2,
    geometry = 3,
    consistency = 4,
    domain = 5,
    numeric = 6,
    fit = 7,
    io = 8,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

const char* error_name(ErrorCode code) noexcept;

}  // namespace qpg
