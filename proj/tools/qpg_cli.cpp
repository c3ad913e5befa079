#include "qpg/qpg.h"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

// Exit codes: 0 success, 2 usage, 10 + qpg_status for library errors.
constexpr int kUsage = 2;
int exit_code(qpg_status s) { return s == QPG_OK ? 0 : 10 + static_cast<int>(s); }

struct Owned {
    char* p = nullptr;
    ~Owned() { qpg_string_free(p); }
};

struct Config {
    qpg_config* c = nullptr;
    ~Config() { qpg_config_free(c); }
};

int report(qpg_status s, const std::string& context) {
    std::cerr << "qpg: " << context << ": " << qpg_status_name(s) << " error: " << qpg_last_error() << "\n";
    return exit_code(s);
}

bool write_to(const std::string& path, const char* text) {
    if (path.empty() || path == "-") {
        std::fputs(text, stdout);
        return true;
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    return static_cast<bool>(out);
}

int load(const std::string& path, Config& cfg) {
    const qpg_status s = qpg_config_load(path.c_str(), &cfg.c);
    return s == QPG_OK ? 0 : report(s, path);
}

std::vector<std::string> shipped_configs() {
    const char* env = std::getenv("QPG_CONFIG_DIR");
    const std::filesystem::path dir = env ? env : QPG_CONFIG_DIR;
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& e : std::filesystem::directory_iterator(dir, ec))
        if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gauge-transform spectral experiments for 1D quasi-periodic Schroedinger operators"};
    app.require_subcommand(1);
    app.set_version_flag("--version", qpg_version());

    std::string config, theta, ladder, lambda, csv_path, json_path, eps;
    double xi_max = 0;
    int samples = 2001, depth = 0;
    std::vector<std::string> configs;

    auto* gap = app.add_subcommand("gap-scan", "gap endpoints over an eps ladder, fit and Hill oracle");
    gap->add_option("--config", config, "experiment config JSON")->required();
    gap->add_option("--theta", theta, "gap frequency as coefficients, e.g. 1 or 1,0");
    gap->add_option("--eps-ladder", ladder, "v1,v2,... or max:points[:ratio]");
    gap->add_option("--csv", csv_path, "write the per-eps table here");
    gap->add_option("--json", json_path, "write the fit JSON here (default stdout)");

    auto* ids = app.add_subcommand("ids-scan", "integrated density of states over an eps ladder");
    ids->add_option("--config", config, "experiment config JSON")->required();
    ids->add_option("--lambda", lambda, "energy as an exact literal (integer, p/q, decimal)");
    ids->add_option("--eps-ladder", ladder, "v1,v2,... or max:points[:ratio]");
    ids->add_option("--csv", csv_path, "write the per-eps table here");
    ids->add_option("--json", json_path, "write the fit JSON here (default stdout)");

    auto* cls = app.add_subcommand("classify", "case label of the IDS expansion at lambda");
    cls->add_option("--config", config, "experiment config JSON")->required();
    cls->add_option("--lambda", lambda, "energy as an exact literal");

    auto* gs = app.add_subcommand("g-scan", "(xi, G(xi)) table of the gauge-transformed symbol");
    gs->add_option("--config", config, "experiment config JSON")->required();
    gs->add_option("--eps", eps, "coupling")->required();
    gs->add_option("--xi-max", xi_max, "upper end of the xi range (default covers all zones)");
    gs->add_option("--samples", samples, "number of xi samples")->check(CLI::Range(2, 10000000));
    gs->add_option("--out", csv_path, "output CSV (default stdout)");

    auto* sr = app.add_subcommand("superres", "nested super-resonance search and oscillation certificate");
    sr->add_option("--config", config, "experiment config JSON with a decay rule")->required();
    sr->add_option("--depth", depth, "number of nested stages")->check(CLI::Range(1, 8));
    sr->add_option("--json", json_path, "output JSON (default stdout)");

    auto* sc = app.add_subcommand("selfcheck", "symbol invariant suite on configs (default: all shipped)");
    sc->add_option("--config", configs, "config(s) to check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    if (*sc) {
        if (configs.empty()) configs = shipped_configs();
        if (configs.empty()) {
            std::cerr << "qpg: selfcheck: no configs found\n";
            return exit_code(QPG_ERR_IO);
        }
        int worst = 0;
        std::cout << "[\n";
        for (size_t i = 0; i < configs.size(); ++i) {
            Config cfg;
            if (int rc = load(configs[i], cfg)) {
                worst = worst ? worst : rc;
                continue;
            }
            Owned out;
            int passed = 0;
            const qpg_status s = qpg_selfcheck(cfg.c, &out.p, &passed);
            if (s != QPG_OK) {
                const int rc = report(s, configs[i]);
                worst = worst ? worst : rc;
                continue;
            }
            std::cout << out.p << (i + 1 < configs.size() ? ",\n" : "\n");
            std::cerr << (passed ? "PASS " : "FAIL ") << configs[i] << "\n";
            if (!passed && !worst) worst = exit_code(QPG_ERR_CONSISTENCY);
        }
        std::cout << "]\n";
        return worst;
    }

    Config cfg;
    if (int rc = load(config, cfg)) return rc;
    Owned js, cs;
    qpg_status s = QPG_OK;
    if (*gap) {
        s = qpg_gap_scan(cfg.c, opt(theta), opt(ladder), &js.p, &cs.p);
    } else if (*ids) {
        s = qpg_ids_scan(cfg.c, opt(lambda), opt(ladder), &js.p, &cs.p);
    } else if (*cls) {
        s = qpg_classify(cfg.c, opt(lambda), &js.p);
    } else if (*gs) {
        s = qpg_g_scan(cfg.c, eps.c_str(), xi_max, samples, &cs.p);
    } else if (*sr) {
        s = qpg_superres(cfg.c, depth, &js.p);
    }
    if (s != QPG_OK) return report(s, app.get_subcommands().front()->get_name());

    bool ok = true;
    if (*gs) {
        ok = write_to(csv_path, cs.p);
    } else {
        if (cs.p && !csv_path.empty()) ok = write_to(csv_path, cs.p);
        std::string text = js.p;
        if (text.empty() || text.back() != '\n') text += '\n';
        ok = write_to(json_path, text.c_str()) && ok;
    }
    if (!ok) {
        std::cerr << "qpg: cannot write output\n";
        return exit_code(QPG_ERR_IO);
    }
    return 0;
}
