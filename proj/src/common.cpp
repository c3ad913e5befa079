#include "qpg/errors.hpp"
#include "qpg/numeric.hpp"
#include "qpg/parallel.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace qpg {

std::string to_string_full(const quad& x) { return x.str(36, std::ios_base::scientific); }

std::string to_string_full(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

const char* error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ok: return "ok";
        case ErrorCode::config: return "config";
        case ErrorCode::capacity: return "capacity";
        case ErrorCode::geometry: return "geometry";
        case ErrorCode::consistency: return "consistency";
        case ErrorCode::domain: return "domain";
        case ErrorCode::numeric: return "numeric";
        case ErrorCode::fit: return "fit";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

}  // namespace qpg

namespace qpg {

int worker_count() {
    if (const char* env = std::getenv("QPG_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace qpg
