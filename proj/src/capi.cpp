#include "qpg/qpg.h"

#include "qpg/driver.hpp"
#include "qpg/errors.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

struct qpg_config {
    qpg::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

template <class F>
qpg_status guarded(F&& f) {
    g_last_error.clear();
    try {
        f();
        return QPG_OK;
    } catch (const qpg::Error& e) {
        g_last_error = e.what();
        return static_cast<qpg_status>(static_cast<int>(e.code()));
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return QPG_ERR_CAPACITY;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QPG_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown exception";
        return QPG_ERR_INTERNAL;
    }
}

std::optional<std::vector<qpg::quad>> ladder_of(const char* s) {
    if (!s) return std::nullopt;
    return qpg::parse_ladder(s);
}

}  // namespace

#define QPG_NEED(p)                                   \
    do {                                              \
        if (!(p)) {                                   \
            g_last_error = "null argument: " #p;      \
            return QPG_ERR_ARGUMENT;                  \
        }                                             \
    } while (0)

extern "C" {

const char* qpg_last_error(void) { return g_last_error.c_str(); }

const char* qpg_status_name(qpg_status s) {
    switch (s) {
        case QPG_OK: return "ok";
        case QPG_ERR_ARGUMENT: return "argument";
        case QPG_ERR_INTERNAL: return "internal";
        default: return qpg::error_name(static_cast<qpg::ErrorCode>(static_cast<int>(s)));
    }
}

const char* qpg_version(void) { return "1.0.0"; }

void qpg_string_free(char* s) { std::free(s); }

qpg_status qpg_config_load(const char* path, qpg_config** out) {
    QPG_NEED(path);
    QPG_NEED(out);
    *out = nullptr;
    return guarded([&] { *out = new qpg_config{qpg::load_config(path)}; });
}

qpg_status qpg_config_parse(const char* json_text, qpg_config** out) {
    QPG_NEED(json_text);
    QPG_NEED(out);
    *out = nullptr;
    return guarded([&] { *out = new qpg_config{qpg::parse_config(json_text)}; });
}

void qpg_config_free(qpg_config* cfg) { delete cfg; }

qpg_status qpg_config_resolved(const qpg_config* cfg, char** json_out) {
    QPG_NEED(cfg);
    QPG_NEED(json_out);
    return guarded([&] { *json_out = dup(cfg->cfg.source); });
}

qpg_status qpg_gap_scan(const qpg_config* cfg, const char* theta, const char* ladder, char** json_out,
                        char** csv_out) {
    QPG_NEED(cfg);
    QPG_NEED(json_out);
    return guarded([&] {
        std::optional<qpg::Freq> th;
        if (theta) th = qpg::parse_freq(theta, static_cast<int>(cfg->cfg.basis.size()));
        const auto r = qpg::gap_scan(cfg->cfg, th, ladder_of(ladder));
        *json_out = dup(r.json);
        if (csv_out) *csv_out = dup(r.csv);
    });
}

qpg_status qpg_ids_scan(const qpg_config* cfg, const char* lambda, const char* ladder, char** json_out,
                        char** csv_out) {
    QPG_NEED(cfg);
    QPG_NEED(json_out);
    return guarded([&] {
        std::optional<std::string> lam;
        if (lambda) lam = lambda;
        const auto r = qpg::ids_scan(cfg->cfg, lam, ladder_of(ladder));
        *json_out = dup(r.json);
        if (csv_out) *csv_out = dup(r.csv);
    });
}

qpg_status qpg_classify(const qpg_config* cfg, const char* lambda, char** json_out) {
    QPG_NEED(cfg);
    QPG_NEED(json_out);
    return guarded([&] {
        std::optional<std::string> lam;
        if (lambda) lam = lambda;
        *json_out = dup(qpg::classify_json(cfg->cfg, lam));
    });
}

qpg_status qpg_g_scan(const qpg_config* cfg, const char* eps, double xi_max, int samples, char** csv_out) {
    QPG_NEED(cfg);
    QPG_NEED(eps);
    QPG_NEED(csv_out);
    return guarded([&] {
        qpg::quad e;
        try {
            e = qpg::quad(std::string(eps));
        } catch (const std::exception&) {
            qpg::fail(qpg::ErrorCode::config, std::string("eps '") + eps + "' is not a number");
        }
        *csv_out = dup(qpg::g_scan(cfg->cfg, e, xi_max, samples));
    });
}

qpg_status qpg_superres(const qpg_config* cfg, int depth, char** json_out) {
    QPG_NEED(cfg);
    QPG_NEED(json_out);
    return guarded([&] {
        std::optional<int> d;
        if (depth > 0) d = depth;
        *json_out = dup(qpg::superres_json(cfg->cfg, d));
    });
}

qpg_status qpg_selfcheck(const qpg_config* cfg, char** json_out, int* passed) {
    QPG_NEED(cfg);
    QPG_NEED(json_out);
    return guarded([&] {
        const auto r = qpg::selfcheck(cfg->cfg);
        *json_out = dup(r.json);
        if (passed) *passed = r.passed ? 1 : 0;
    });
}

}  // extern "C"
