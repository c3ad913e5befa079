#include "qpg/driver.hpp"

#include "qpg/errors.hpp"
#include "qpg/gaps.hpp"
#include "qpg/ids.hpp"
#include "qpg/oracle.hpp"
#include "qpg/parallel.hpp"
#include "qpg/spectral.hpp"

#include "json.hpp"

#include <cmath>
#include <sstream>

namespace qpg {

namespace {

using ojson = nlohmann::ordered_json;

std::string q(const quad& x) { return to_string_full(x); }

std::string num(real_fit x) {
    std::ostringstream os;
    os.precision(21);
    os << x;
    return os.str();
}

ojson fit_json(const ExpansionFit& f) {
    ojson j;
    j["exponents"] = f.exponents;
    ojson c = ojson::array(), e = ojson::array();
    for (size_t i = 0; i < f.coefficients.size(); ++i) {
        c.push_back(num(f.coefficients[i]));
        e.push_back(num(f.errors[i]));
    }
    j["coefficients"] = c;
    j["errors"] = e;
    j["residual_norm"] = num(f.residual_norm);
    j["relative_residual"] = num(f.relative_residual);
    j["condition_number"] = f.condition_number;
    j["model_failure"] = f.model_failure;
    return j;
}

ojson power_json(const PowerLawFit& p) {
    return ojson{{"exponent", p.exponent},
                 {"coefficient", num(p.coefficient)},
                 {"log_residual", num(p.log_residual)},
                 {"used", p.used},
                 {"noise_floor", num(p.noise_floor)}};
}

ojson freq_json(const Freq& f, int dim) { return std::vector<int>(f.c.begin(), f.c.begin() + dim); }

ojson header(const char* schema, const ExperimentConfig& c) {
    ojson j;
    j["schema"] = schema;
    j["config"] = ojson::parse(c.source);
    return j;
}

// Periodic potentials with a single generator have a Hill oracle; m is the gap index.
std::optional<int> hill_index(const PotentialSpec& V, const Freq& theta) {
    if (V.dim() != 1 || !V.is_periodic()) return std::nullopt;
    return theta.c[0] < 0 ? -theta.c[0] : theta.c[0];
}

std::optional<PowerLawFit> try_power_law(const std::vector<Sample>& s, real_fit floor) {
    try {
        return fit_power_law(s, floor);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::optional<ExpansionFit> try_fit(const std::vector<Sample>& s, const std::vector<double>& ex) {
    try {
        return fit_expansion(s, ex);
    } catch (const Error&) {
        return std::nullopt;
    }
}

constexpr real_fit kNoiseFloor = 1e-30L;

}  // namespace

std::vector<quad> parse_ladder(const std::string& text) {
    std::vector<quad> out;
    try {
        if (text.find(':') != std::string::npos) {
            std::vector<std::string> parts;
            std::stringstream ss(text);
            for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
            require(parts.size() == 2 || parts.size() == 3, ErrorCode::config,
                    "eps ladder '" + text + "': expected max:points[:ratio]");
            const int points = std::stoi(parts[1]);
            require(points >= 1, ErrorCode::config, "eps ladder: points must be positive");
            return geometric_ladder(quad(parts[0]), points, parts.size() == 3 ? quad(parts[2]) : quad(2));
        }
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) {
            if (p.empty()) continue;
            out.push_back(quad(p));
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail(ErrorCode::config, "eps ladder '" + text + "': not a list of numbers");
    }
    require(!out.empty(), ErrorCode::config, "eps ladder is empty");
    for (const auto& e : out) require(e > 0, ErrorCode::config, "eps ladder values must be positive");
    return out;
}

RunOutput gap_scan(const ExperimentConfig& c, const std::optional<Freq>& theta_opt,
                   const std::optional<std::vector<quad>>& ladder_opt) {
    const PotentialSpec V = c.potential();
    const int dim = V.dim();
    const Freq theta = theta_opt ? *theta_opt : (c.gap_theta ? *c.gap_theta : Freq::unit(0));
    require(!theta.is_zero(), ErrorCode::config, "gap-scan: theta must be nonzero");
    const auto ladder = ladder_opt ? *ladder_opt : c.ladder();
    const GaugeRun run = run_gauge(V, c.zones(V), c.gauge_options());
    const GapExpansion ge = gap_expansion(run, theta, ladder);

    const auto m = hill_index(V, theta);
    std::vector<HillGap<quad>> hill(ladder.size());
    if (m) parallel_for(ladder.size(), [&](size_t i) { hill[i] = hill_gap<quad>(V, *m, ge.points[i].eps); });

    std::ostringstream csv;
    csv << "eps,sigma_minus_max,sigma_plus_min,gap,hill_lower,hill_upper,hill_gap,err_lower,err_upper\n";
    std::vector<Sample> el, eu, og;
    for (size_t i = 0; i < ge.points.size(); ++i) {
        const auto& p = ge.points[i];
        csv << q(p.eps) << ',' << q(p.sigma_minus_max) << ',' << q(p.sigma_plus_min) << ',' << q(p.gap);
        if (m) {
            const auto& h = hill[i];
            const quad dl = abs(p.sigma_minus_max - h.lower), du = abs(p.sigma_plus_min - h.upper);
            csv << ',' << q(h.lower) << ',' << q(h.upper) << ',' << q(h.length()) << ',' << q(dl) << ',' << q(du);
            el.push_back({static_cast<real_fit>(p.eps), static_cast<real_fit>(dl)});
            eu.push_back({static_cast<real_fit>(p.eps), static_cast<real_fit>(du)});
            og.push_back({static_cast<real_fit>(p.eps), static_cast<real_fit>(h.length())});
        } else {
            csv << ",,,,,";
        }
        csv << '\n';
    }

    ojson j = header("gap-scan/1", c);
    j["theta"] = freq_json(theta, dim);
    j["theta_value"] = q(V.basis()->value_q(theta));
    j["zone_width"] = q(run.zones().width);
    j["fit"] = fit_json(ge.fit);
    j["predicted_leading"] = {{"power", ge.predicted.power}, {"coefficient", q(ge.predicted.coefficient)}};
    j["boundary_flag"] = std::any_of(ge.points.begin(), ge.points.end(), [](const auto& p) { return p.boundary_flag; });
    if (m) {
        ojson o;
        o["hill_index"] = *m;
        if (auto f = try_fit(og, ge.fit.exponents)) o["gap_fit"] = fit_json(*f);
        if (auto p = try_power_law(og, kNoiseFloor)) o["gap_power_law"] = power_json(*p);
        if (auto p = try_power_law(el, kNoiseFloor)) o["endpoint_error_lower"] = power_json(*p);
        if (auto p = try_power_law(eu, kNoiseFloor)) o["endpoint_error_upper"] = power_json(*p);
        j["oracle"] = o;
    }
    return {j.dump(2), csv.str()};
}

namespace {

ojson label_json(const CaseLabel& L, int dim, int N) {
    ojson j;
    j["case"] = case_name(L.kind);
    if (L.kind == CaseKind::res_half_integer) j["k"] = L.k;
    j["lambda"] = L.lambda_text;
    j["resonant"] = L.resonant;
    if (L.resonant) {
        j["theta0"] = freq_json(L.theta0, dim);
        j["theta0_value"] = q(L.theta0_value);
        j["nu"] = {q(L.nu.re), q(L.nu.im)};
        j["s2"] = q(L.s2);
        j["g2"] = {q(L.g2.re), q(L.g2.im)};
        j["discriminant"] = q(L.discriminant);
    }
    j["tau"] = q(L.tau);
    j["constant"] = q(L.constant());
    j["is_constant"] = L.is_constant();
    j["exponents"] = L.exponents(N);
    if (auto a = L.analytic_leading()) j["analytic_leading"] = {{"exponent", a->first}, {"coefficient", q(a->second)}};
    return j;
}

}  // namespace

RunOutput ids_scan(const ExperimentConfig& c, const std::optional<std::string>& lambda_opt,
                   const std::optional<std::vector<quad>>& ladder_opt) {
    require(lambda_opt || c.lambda, ErrorCode::config, "ids-scan: no lambda (give --lambda or config lambda)");
    const std::string lambda = lambda_opt ? *lambda_opt : *c.lambda;
    const PotentialSpec V = c.potential();
    const auto ladder = ladder_opt ? *ladder_opt : c.ladder();
    const GaugeRun run = run_gauge(V, c.zones(V), c.gauge_options());
    const CaseLabel L = classify(run, lambda);
    const IdsExpansion ex = ids_expansion(run, L, ladder);

    const bool hill_ok = V.dim() == 1 && V.is_periodic();
    std::vector<quad> hill(ex.points.size()), trunc(ex.points.size());
    TruncatedIdsOptions to;
    to.M = c.oracle.M;
    parallel_for(ex.points.size(), [&](size_t i) {
        if (hill_ok) hill[i] = hill_ids<quad>(V, L.lambda, ex.points[i].eps);
        trunc[i] = truncated_ids<quad>(V, L.lambda, ex.points[i].eps, to).value;
    });

    std::ostringstream csv;
    csv << "eps,ids,deviation,hill,truncated,err_truncated\n";
    std::vector<Sample> hs, ts, err;
    const quad c0 = L.constant();
    for (size_t i = 0; i < ex.points.size(); ++i) {
        const auto& p = ex.points[i];
        csv << q(p.eps) << ',' << q(p.value) << ',' << q(p.deviation) << ',' << (hill_ok ? q(hill[i]) : "") << ','
            << q(trunc[i]) << ',' << q(abs(p.value - trunc[i])) << '\n';
        if (hill_ok) hs.push_back({static_cast<real_fit>(p.eps), static_cast<real_fit>(hill[i] - c0)});
        ts.push_back({static_cast<real_fit>(p.eps), static_cast<real_fit>(trunc[i] - c0)});
        err.push_back({static_cast<real_fit>(p.eps), static_cast<real_fit>(abs(p.value - trunc[i]))});
    }

    ojson j = header("ids-scan/1", c);
    j["label"] = label_json(L, V.dim(), c.N);
    j["max_constant_deviation"] = q(ex.max_constant_deviation);
    if (ex.fit) j["fit"] = fit_json(*ex.fit);
    if (ex.power_law) j["power_law"] = power_json(*ex.power_law);
    if (L.kind == CaseKind::degenerate || L.kind == CaseKind::res_flat) j["detected_k"] = ex.detected_k;
    ojson o;
    o["M"] = c.oracle.M;
    const auto exps = L.exponents(c.N);
    if (!L.is_constant()) {
        if (!exps.empty()) {
            if (hill_ok)
                if (auto f = try_fit(hs, exps)) o["hill_fit"] = fit_json(*f);
            if (auto f = try_fit(ts, exps)) o["truncated_fit"] = fit_json(*f);
        }
        if (hill_ok)
            if (auto p = try_power_law(hs, kNoiseFloor)) o["hill_power_law"] = power_json(*p);
        if (auto p = try_power_law(ts, kNoiseFloor)) o["truncated_power_law"] = power_json(*p);
    }
    if (auto p = try_power_law(err, kNoiseFloor)) o["error_vs_truncated"] = power_json(*p);
    j["oracle"] = o;
    return {j.dump(2), csv.str()};
}

std::string classify_json(const ExperimentConfig& c, const std::optional<std::string>& lambda_opt) {
    require(lambda_opt || c.lambda, ErrorCode::config, "classify: no lambda (give --lambda or config lambda)");
    const PotentialSpec V = c.potential();
    const GaugeRun run = run_gauge(V, c.zones(V), c.gauge_options());
    const CaseLabel L = classify(run, lambda_opt ? *lambda_opt : *c.lambda);
    ojson j = header("classify/1", c);
    j["label"] = label_json(L, V.dim(), c.N);
    return j.dump(2);
}

std::string g_scan(const ExperimentConfig& c, quad eps, double xi_max, int samples) {
    require(eps > 0, ErrorCode::config, "g-scan: eps must be positive");
    require(samples >= 2, ErrorCode::config, "g-scan: need at least two samples");
    const PotentialSpec V = c.potential();
    const GaugeRun run = run_gauge(V, c.zones(V), c.gauge_options());
    const SpectralMap<quad> map(run, eps);
    if (!(xi_max > 0)) {
        double m = 0;
        for (const auto& z : map.zones().zones()) m = std::max(m, std::abs(static_cast<double>(z.center)));
        xi_max = m + 1;
    }
    std::vector<quad> G(samples);
    std::vector<int> zone(samples);
    parallel_for(static_cast<size_t>(samples), [&](size_t i) {
        const quad xi = quad(xi_max) * quad(static_cast<long long>(i)) / quad(samples - 1);
        G[i] = map.G(xi);
        zone[i] = map.zone_of(xi);
    });
    std::ostringstream os;
    os << "xi,G,zone\n";
    for (int i = 0; i < samples; ++i) {
        const quad xi = quad(xi_max) * quad(i) / quad(samples - 1);
        os << q(xi) << ',' << q(G[i]) << ',' << zone[i] << '\n';
    }
    return os.str();
}

std::string superres_json(const ExperimentConfig& c, std::optional<int> depth) {
    require(c.decay.has_value(), ErrorCode::config, "superres: config needs a decay rule");
    const PotentialSpec V = c.potential();
    const DyadicSchedule s = build_schedule(V.basis(), V.shell().theta0(), c.schedule_params());
    SuperResonanceOptions opt;
    opt.depth = depth ? *depth : c.superres.depth;
    opt.xi_lo = c.superres.xi_lo;
    opt.xi_hi = c.superres.xi_hi;
    opt.enumerate_order = c.superres.enumerate_order;
    const SuperResonanceCandidate cand = find_super_resonance(s, V, opt);
    const OscillationReport rep = demonstrate_oscillation(cand);

    ojson j = header("superres/1", c);
    ojson sch;
    sch["smoothness"] = s.smoothness();
    sch["minimal_P"] = minimal_smoothness_P(s.params().N, s.params().P0);
    ojson ws = ojson::array();
    for (const auto& w : s.windows())
        ws.push_back({{"n", w.n},
                      {"eps", q(w.eps)},
                      {"L_tilde", w.L_tilde},
                      {"max_order", w.max_order},
                      {"min_theta", w.min_theta},
                      {"min_separation", w.min_separation},
                      {"max_zone_length", w.max_zone_length},
                      {"disjoint", w.disjoint},
                      {"measure_bound", w.measure_bound},
                      {"measure_cap", w.measure_cap},
                      {"measure_ok", w.measure_ok}});
    sch["windows"] = ws;
    j["schedule"] = sch;
    j["candidate"] = ojson::parse(cand.to_json(-1));
    ojson cert;
    cert["oscillates"] = rep.oscillates;
    cert["complete"] = cand.complete;
    if (auto Vc = c.control_potential()) {
        ScheduleParams p = c.schedule_params();
        p.eps0 = quad(c.control->eps0);
        const DyadicSchedule cs = build_schedule(V.basis(), V.shell().theta0(), p);
        ControlOptions co;
        co.lambda_text = c.control->lambda;
        co.first_window = c.control->first_window;
        co.windows = c.control->windows;
        co.points = c.control->points;
        auto [fits, st] = control_stitch(cs, *Vc, co, c.gauge_options());
        ojson ctl;
        ctl["lambda"] = co.lambda_text;
        ctl["eps0"] = c.control->eps0;
        ojson fw = ojson::array();
        for (const auto& w : fits) fw.push_back({{"n", w.n}, {"fit", fit_json(w.fit)}});
        ctl["windows"] = fw;
        ctl["consistent"] = st.consistent;
        if (st.global) ctl["global"] = fit_json(*st.global);
        ojson inc = ojson::array();
        for (const auto& e : st.certificate)
            inc.push_back({{"exponent", e.exponent},
                           {"n_a", e.n_a},
                           {"n_b", e.n_b},
                           {"value_a", num(e.value_a)},
                           {"value_b", num(e.value_b)}});
        ctl["inconsistencies"] = inc;
        cert["control"] = ctl;
    }
    j["certificate"] = cert;
    return j.dump(2);
}

SelfcheckResult selfcheck(const ExperimentConfig& c) {
    const PotentialSpec V = c.potential();
    const GaugeRun run = run_gauge(V, c.zones(V), c.gauge_options());
    const SpectralMap<double> map(run, static_cast<double>(c.epsilon.max));
    // xi grid: uniform, plus points straddling every zone edge
    std::vector<double> xis;
    double xi_max = 0;
    for (const auto& z : map.zones().zones()) xi_max = std::max(xi_max, std::abs(static_cast<double>(z.center)));
    xi_max += 1;
    for (int i = 0; i <= 200; ++i) xis.push_back(xi_max * i / 200.0);
    for (const auto& z : map.zones().zones()) {
        const double lo = static_cast<double>(z.lo()), hi = static_cast<double>(z.hi());
        const double w = hi - lo;
        for (double t : {-0.01, 0.01, 0.25, 0.5, 0.75, 0.99, 1.01}) xis.push_back(lo + t * w);
    }
    const GaugeCheckReport r = check_gauge_invariants(run, xis);

    const auto& zs = map.zones().zones();
    bool disjoint = true, wide_disjoint = true;
    for (size_t i = 1; i < zs.size(); ++i) {
        if (!(zs[i - 1].hi() < zs[i].lo())) disjoint = false;
        if (!(zs[i - 1].wide_hi() < zs[i].wide_lo())) wide_disjoint = false;
    }
    constexpr double kCancel = 1e-12, kHerm = 1e-12;
    ojson j = header("selfcheck/1", c);
    j["xi_samples"] = r.samples;
    j["quad_refined"] = r.refined;
    j["zones"] = zs.size();
    j["cancellation_max"] = r.cancellation_max;
    j["hermitian_max"] = r.hermitian_max;
    if (r.reflection_checked) j["reflection_max"] = r.reflection_max;
    j["off_zone_max"] = r.off_zone_max;
    j["first_order_max"] = r.first_order_max;
    j["support_ok"] = r.support_ok;
    j["structure_ok"] = r.structure_ok;
    j["zones_disjoint"] = disjoint;
    j["wide_zones_disjoint"] = wide_disjoint;
    bool pass = r.cancellation_max <= kCancel && r.hermitian_max <= kHerm && r.reflection_max <= kHerm && r.off_zone_max <= kCancel && r.support_ok &&
                r.structure_ok && disjoint && wide_disjoint;
    if (c.decay) {
        const DyadicSchedule s = build_schedule(V.basis(), V.shell().theta0(), c.schedule_params());
        bool wok = true;
        for (const auto& w : s.windows()) wok = wok && w.disjoint && w.measure_ok;
        j["schedule_windows_ok"] = wok;
        j["schedule_windows"] = s.windows().size();
        pass = pass && wok;
    }
    j["passed"] = pass;
    return {pass, j.dump(2)};
}

}  // namespace qpg
