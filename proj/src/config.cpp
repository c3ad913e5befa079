#include "qpg/config.hpp"

#include "qpg/errors.hpp"
#include "qpg/spectral.hpp"

#include "json.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace qpg {

namespace {

using json = nlohmann::json;

[[noreturn]] void schema(const std::string& path, const std::string& msg) {
    fail(ErrorCode::config, "config " + (path.empty() ? std::string("/") : path) + ": " + msg);
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) schema(path, "expected an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) schema(path + "/" + it.key(), "unknown field");
}

const json* field(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

// Shortest round-trip text of a double, so a literal like 0.005 reaches quad as written.
std::string number_text(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string real_text(const json& j, const std::string& path) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        try {
            (void)quad(s);
        } catch (...) {
            schema(path, "not a number: '" + s + "'");
        }
        return s;
    }
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    if (j.is_number()) return number_text(j.get<double>());
    schema(path, "expected a number or a decimal string");
}

quad get_quad(const json& j, const std::string& path) { return quad(real_text(j, path)); }

double get_double(const json& j, const std::string& path) {
    if (!j.is_number()) schema(path, "expected a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& path, int lo, int hi) {
    if (!j.is_number_integer()) schema(path, "expected an integer");
    const long long v = j.get<long long>();
    if (v < lo || v > hi) schema(path, "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(v);
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) schema(path, "expected a string");
    return j.get<std::string>();
}

Freq get_freq(const json& j, const std::string& path, int dim) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        schema(path, "expected an array of " + std::to_string(dim) + " integers");
    Freq f;
    for (int i = 0; i < dim; ++i) f.c[i] = get_int(j[i], path + "/" + std::to_string(i), -1000000, 1000000);
    return f;
}

std::vector<CoefEntry> get_coefficients(const json& j, const std::string& path, int dim, quad& tau) {
    if (!j.is_array()) schema(path, "expected an array");
    std::vector<CoefEntry> out;
    for (size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        allow_keys(j[i], p, {"theta", "value", "re", "im"});
        const json* th = field(j[i], "theta");
        if (!th) schema(p + "/theta", "missing");
        CoefEntry e;
        e.theta = get_freq(*th, p + "/theta", dim);
        if (const json* v = field(j[i], "value")) {
            if (field(j[i], "re") || field(j[i], "im")) schema(p, "give either value or re/im");
            e.value = Cplx<quad>(get_quad(*v, p + "/value"));
        } else {
            const json* re = field(j[i], "re");
            const json* im = field(j[i], "im");
            if (!re && !im) schema(p + "/value", "missing");
            e.value = Cplx<quad>(re ? get_quad(*re, p + "/re") : quad(0), im ? get_quad(*im, p + "/im") : quad(0));
        }
        if (e.theta.is_zero()) {
            if (e.value.im != 0) schema(p + "/im", "the theta = 0 coefficient must be real");
            tau = e.value.re;
            continue;
        }
        out.push_back(e);
    }
    return out;
}

Mollifier get_mollifier(const json& j, const std::string& path) {
    const std::string s = get_string(j, path);
    if (s == "exp1") return Mollifier::exp1;
    if (s == "exp2") return Mollifier::exp2;
    schema(path, "unknown mollifier '" + s + "' (exp1 | exp2)");
}

}  // namespace

Freq parse_freq(const std::string& text, int dim) {
    std::string t = text;
    for (char& c : t)
        if (c == '[' || c == ']' || c == ',') c = ' ';
    std::istringstream is(t);
    Freq f;
    int n = 0;
    long long v;
    while (is >> v) {
        require(n < dim, ErrorCode::config, "theta '" + text + "': basis has dimension " + std::to_string(dim));
        f.c[n++] = static_cast<int32_t>(v);
    }
    require(is.eof() && n == dim, ErrorCode::config,
            "theta '" + text + "': expected " + std::to_string(dim) + " integer coefficients");
    return f;
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::config, std::string("config: invalid JSON: ") + e.what());
    }
    allow_keys(j, "", {"name", "basis", "theta", "coefficients", "tau", "decay", "N", "P0", "epsilon", "oracle",
                       "zones", "lambda", "gap_theta", "schedule", "superres", "control"});
    ExperimentConfig c;
    if (const json* v = field(j, "name")) c.name = get_string(*v, "/name");

    const json* b = field(j, "basis");
    if (!b) schema("/basis", "missing");
    if (!b->is_array() || b->empty() || b->size() > static_cast<size_t>(kMaxGenerators))
        schema("/basis", "expected 1.." + std::to_string(kMaxGenerators) + " generators");
    for (size_t i = 0; i < b->size(); ++i) {
        const std::string p = "/basis/" + std::to_string(i);
        std::string g = (*b)[i].is_string() ? (*b)[i].get<std::string>() : real_text((*b)[i], p);
        c.basis.push_back(g);
    }
    const int dim = static_cast<int>(c.basis.size());
    try {
        (void)GeneratorBasis(c.basis);
    } catch (const Error& e) {
        schema("/basis", e.what());
    }

    const json* th = field(j, "theta");
    if (!th || (th->is_string() && th->get<std::string>() == "standard")) {
        c.theta = standard_theta0(dim);
    } else {
        if (!th->is_array()) schema("/theta", "expected \"standard\" or an array of coefficient arrays");
        for (size_t i = 0; i < th->size(); ++i) c.theta.push_back(get_freq((*th)[i], "/theta/" + std::to_string(i), dim));
    }

    const json* co = field(j, "coefficients");
    const json* dc = field(j, "decay");
    if (co && dc) schema("/decay", "give either coefficients or decay");
    if (!co && !dc) schema("/coefficients", "missing (or give decay)");
    if (co) c.coefficients = get_coefficients(*co, "/coefficients", dim, c.tau);
    if (dc) {
        allow_keys(*dc, "/decay", {"C", "P", "seed", "L"});
        DecayRule r;
        const json* C = field(*dc, "C");
        const json* P = field(*dc, "P");
        if (!C) schema("/decay/C", "missing");
        if (!P) schema("/decay/P", "missing");
        r.C = get_double(*C, "/decay/C");
        r.P = get_double(*P, "/decay/P");
        if (!(r.C > 0)) schema("/decay/C", "must be positive");
        if (!(r.P > 0)) schema("/decay/P", "must be positive");
        if (const json* s = field(*dc, "seed")) r.seed = static_cast<uint64_t>(get_int(*s, "/decay/seed", 0, INT32_MAX));
        if (const json* L = field(*dc, "L")) c.decay_L = get_int(*L, "/decay/L", 1, 64);
        c.decay = r;
    }
    if (const json* t = field(j, "tau")) {
        if (co) {
            for (const auto& e : (*co))
                if (e.is_object() && e.contains("theta") && e["theta"].is_array() &&
                    std::all_of(e["theta"].begin(), e["theta"].end(), [](const json& x) { return x == 0; }))
                    schema("/tau", "tau given twice (also as the theta = 0 coefficient)");
        }
        c.tau = get_quad(*t, "/tau");
    }

    if (const json* v = field(j, "N")) c.N = get_int(*v, "/N", 1, 8);
    if (const json* v = field(j, "P0")) {
        c.P0 = get_double(*v, "/P0");
        if (!(c.P0 > 0)) schema("/P0", "must be positive");
    }
    if (const json* e = field(j, "epsilon")) {
        allow_keys(*e, "/epsilon", {"max", "points", "ratio"});
        if (const json* v = field(*e, "max")) c.epsilon.max = get_quad(*v, "/epsilon/max");
        if (const json* v = field(*e, "points")) c.epsilon.points = get_int(*v, "/epsilon/points", 1, 4096);
        if (const json* v = field(*e, "ratio")) c.epsilon.ratio = get_quad(*v, "/epsilon/ratio");
        if (!(c.epsilon.max > 0)) schema("/epsilon/max", "must be positive");
        if (!(c.epsilon.ratio > 1)) schema("/epsilon/ratio", "must exceed 1");
    }
    if (const json* o = field(j, "oracle")) {
        allow_keys(*o, "/oracle", {"M", "grid"});
        if (const json* v = field(*o, "M")) c.oracle.M = get_int(*v, "/oracle/M", 1, 64);
        if (const json* v = field(*o, "grid")) c.oracle.grid = get_int(*v, "/oracle/grid", 16, 1 << 22);
    }
    if (const json* z = field(j, "zones")) {
        allow_keys(*z, "/zones", {"delta", "mollifier"});
        if (const json* v = field(*z, "delta")) {
            c.delta = get_quad(*v, "/zones/delta");
            if (!(*c.delta > 0)) schema("/zones/delta", "must be positive");
        }
        if (const json* v = field(*z, "mollifier")) c.mollifier = get_mollifier(*v, "/zones/mollifier");
    }
    if (const json* v = field(j, "lambda")) c.lambda = real_text(*v, "/lambda");
    if (const json* v = field(j, "gap_theta")) c.gap_theta = get_freq(*v, "/gap_theta", dim);
    if (const json* s = field(j, "schedule")) {
        allow_keys(*s, "/schedule", {"eps0", "n_max"});
        if (const json* v = field(*s, "eps0")) c.schedule.eps0 = real_text(*v, "/schedule/eps0");
        if (const json* v = field(*s, "n_max")) c.schedule.n_max = get_int(*v, "/schedule/n_max", 0, 64);
    }
    if (const json* s = field(j, "superres")) {
        allow_keys(*s, "/superres", {"depth", "xi_lo", "xi_hi", "enumerate_order"});
        if (const json* v = field(*s, "depth")) c.superres.depth = get_int(*v, "/superres/depth", 1, 8);
        if (const json* v = field(*s, "xi_lo")) c.superres.xi_lo = get_double(*v, "/superres/xi_lo");
        if (const json* v = field(*s, "xi_hi")) c.superres.xi_hi = get_double(*v, "/superres/xi_hi");
        if (const json* v = field(*s, "enumerate_order"))
            c.superres.enumerate_order = get_int(*v, "/superres/enumerate_order", 1, 200);
        if (!(c.superres.xi_lo > 0 && c.superres.xi_hi > c.superres.xi_lo + 0.2))
            schema("/superres", "need 0 < xi_lo and xi_hi > xi_lo + 0.2");
    }
    if (const json* s = field(j, "control")) {
        allow_keys(*s, "/control", {"coefficients", "tau", "lambda", "eps0", "first_window", "windows", "points"});
        ControlSpec cs;
        const json* cc = field(*s, "coefficients");
        if (!cc) schema("/control/coefficients", "missing");
        cs.coefficients = get_coefficients(*cc, "/control/coefficients", dim, cs.tau);
        if (const json* v = field(*s, "tau")) cs.tau = get_quad(*v, "/control/tau");
        if (const json* v = field(*s, "lambda")) cs.lambda = real_text(*v, "/control/lambda");
        if (const json* v = field(*s, "eps0")) cs.eps0 = real_text(*v, "/control/eps0");
        if (const json* v = field(*s, "first_window")) cs.first_window = get_int(*v, "/control/first_window", 0, 64);
        if (const json* v = field(*s, "windows")) cs.windows = get_int(*v, "/control/windows", 2, 64);
        if (const json* v = field(*s, "points")) cs.points = get_int(*v, "/control/points", 4, 256);
        c.control = cs;
    }

    // Build once to surface potential-level errors (norm, theta0 shape) as config errors.
    try {
        const PotentialSpec V = c.potential();
        if (c.control) (void)c.control_potential();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::config) throw;
        fail(ErrorCode::config, std::string("config: ") + e.what());
    }

    // Resolved config: every field with its effective value.
    json r;
    r["name"] = c.name;
    r["basis"] = c.basis;
    json tj = json::array();
    for (const auto& f : c.theta) tj.push_back(std::vector<int>(f.c.begin(), f.c.begin() + dim));
    r["theta"] = tj;
    auto coef_json = [&](const std::vector<CoefEntry>& v) {
        json a = json::array();
        for (const auto& e : v)
            a.push_back({{"theta", std::vector<int>(e.theta.c.begin(), e.theta.c.begin() + dim)},
                         {"re", to_string_full(e.value.re)},
                         {"im", to_string_full(e.value.im)}});
        return a;
    };
    if (c.decay) {
        r["decay"] = {{"C", c.decay->C}, {"P", c.decay->P}, {"seed", c.decay->seed}, {"L", c.decay_L}};
    } else {
        r["coefficients"] = coef_json(c.coefficients);
    }
    r["tau"] = to_string_full(c.tau);
    r["N"] = c.N;
    r["P0"] = c.P0;
    r["epsilon"] = {{"max", to_string_full(c.epsilon.max)},
                    {"points", c.epsilon.points},
                    {"ratio", to_string_full(c.epsilon.ratio)}};
    r["oracle"] = {{"M", c.oracle.M}, {"grid", c.oracle.grid}};
    {
        const PotentialSpec V = c.potential();
        r["zones"] = {{"delta", to_string_full(c.zones(V).width)},
                      {"mollifier", c.mollifier == Mollifier::exp1 ? "exp1" : "exp2"}};
    }
    if (c.lambda) r["lambda"] = *c.lambda;
    if (c.gap_theta) r["gap_theta"] = std::vector<int>(c.gap_theta->c.begin(), c.gap_theta->c.begin() + dim);
    r["schedule"] = {{"eps0", c.schedule.eps0}, {"n_max", c.schedule.n_max}};
    r["superres"] = {{"depth", c.superres.depth},
                     {"xi_lo", c.superres.xi_lo},
                     {"xi_hi", c.superres.xi_hi},
                     {"enumerate_order", c.superres.enumerate_order}};
    if (c.control) {
        r["control"] = {{"coefficients", coef_json(c.control->coefficients)},
                        {"tau", to_string_full(c.control->tau)},
                        {"lambda", c.control->lambda},
                        {"eps0", c.control->eps0},
                        {"first_window", c.control->first_window},
                        {"windows", c.control->windows},
                        {"points", c.control->points}};
    }
    c.source = r.dump();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

BasisPtr ExperimentConfig::basis_ptr() const { return std::make_shared<const GeneratorBasis>(basis); }

PotentialSpec ExperimentConfig::potential() const {
    const BasisPtr B = basis_ptr();
    if (decay) return PotentialSpec::from_decay(B, theta, *decay, static_cast<double>(tau), decay_L);
    auto entries = coefficients;
    if (tau != 0) entries.push_back({Freq::zero(), Cplx<quad>(tau)});
    return PotentialSpec::from_coefficients(B, theta, entries);
}

std::optional<PotentialSpec> ExperimentConfig::control_potential() const {
    if (!control) return std::nullopt;
    auto entries = control->coefficients;
    if (control->tau != 0) entries.push_back({Freq::zero(), Cplx<quad>(control->tau)});
    return PotentialSpec::from_coefficients(basis_ptr(), theta, entries);
}

ZoneSpec ExperimentConfig::zones(const PotentialSpec& V) const {
    ZoneSpec z;
    z.width = delta ? *delta : default_delta(V.basis(), V.shell().theta0(), N);
    z.mollifier = mollifier;
    return z;
}

GaugeOptions ExperimentConfig::gauge_options() const {
    GaugeOptions o;
    o.N = N;
    return o;
}

std::vector<quad> ExperimentConfig::ladder() const { return geometric_ladder(epsilon.max, epsilon.points, epsilon.ratio); }

ScheduleParams ExperimentConfig::schedule_params() const {
    ScheduleParams p;
    p.N = N;
    p.P0 = P0;
    if (decay) {
        p.P = decay->P;
        p.C = decay->C;
    }
    p.eps0 = quad(schedule.eps0);
    p.n_max = schedule.n_max;
    return p;
}

}  // namespace qpg
