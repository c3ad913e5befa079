#include "qpg/asymptotics.hpp"

#include "qpg/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

namespace qpg {

using MatL = Eigen::Matrix<real_fit, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<real_fit, Eigen::Dynamic, 1>;

std::vector<quad> geometric_ladder(quad eps_max, int points, quad ratio) {
    std::vector<quad> out;
    quad e = eps_max;
    for (int k = 0; k < points; ++k) {
        out.push_back(e);
        e /= ratio;
    }
    return out;
}

std::vector<double> exponent_series(double start, int count) {
    std::vector<double> out;
    for (int k = 0; k < count; ++k) out.push_back(start + k);
    return out;
}

namespace {

int index_of(const std::vector<double>& ex, double alpha) {
    for (size_t i = 0; i < ex.size(); ++i)
        if (std::abs(ex[i] - alpha) < 1e-12) return static_cast<int>(i);
    return -1;
}

}  // namespace

real_fit ExpansionFit::coefficient(double alpha) const {
    const int i = index_of(exponents, alpha);
    return i < 0 ? 0 : coefficients[i];
}

real_fit ExpansionFit::error(double alpha) const {
    const int i = index_of(exponents, alpha);
    return i < 0 ? 0 : errors[i];
}

ExpansionFit ExpansionFit::half_ladder_refit(const FitGuard& guard) const {
    std::vector<Sample> half;
    for (size_t i = 0; i < ladder.size(); i += 2) half.push_back(ladder[i]);
    return fit_expansion(half, exponents, guard);
}

ExpansionFit fit_expansion(const std::vector<Sample>& samples, const std::vector<double>& exponents,
                           const FitGuard& guard) {
    const int m = static_cast<int>(samples.size());
    const int k = static_cast<int>(exponents.size());
    require(k >= 1, ErrorCode::fit, "fit_expansion: empty exponent set");
    require(m >= k + guard.extra_samples, ErrorCode::fit,
            "fit_expansion: need at least " + std::to_string(k + guard.extra_samples) + " samples, got " +
                std::to_string(m));
    MatL A(m, k);
    VecL b(m);
    for (int i = 0; i < m; ++i) {
        require(samples[i].eps > 0, ErrorCode::fit, "fit_expansion: eps must be positive");
        for (int j = 0; j < k; ++j) A(i, j) = std::pow(samples[i].eps, static_cast<real_fit>(exponents[j]));
        b(i) = samples[i].value;
    }
    // equilibrate columns
    VecL scale(k);
    for (int j = 0; j < k; ++j) {
        scale(j) = A.col(j).norm();
        require(scale(j) > 0, ErrorCode::fit, "fit_expansion: zero design column");
        A.col(j) /= scale(j);
    }
    Eigen::JacobiSVD<MatL> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const real_fit smax = sv(0), smin = sv(k - 1);
    require(smin > 0, ErrorCode::fit, "fit_expansion: rank-deficient design");
    ExpansionFit fit;
    fit.condition_number = static_cast<double>(smax / smin);
    require(fit.condition_number <= guard.condition_cap, ErrorCode::fit,
            "fit_expansion: condition number " + std::to_string(fit.condition_number) + " exceeds cap");
    const VecL x = svd.solve(b);
    const VecL r = A * x - b;
    real_fit vmax = 0;
    for (int i = 0; i < m; ++i) vmax = std::max(vmax, std::abs(b(i)));
    fit.residual_norm = r.cwiseAbs().maxCoeff();
    fit.relative_residual = vmax > 0 ? fit.residual_norm / vmax : fit.residual_norm;
    const int dof = std::max(1, m - k);
    const real_fit rms = std::sqrt(r.squaredNorm() / dof);
    const MatL& V = svd.matrixV();
    fit.exponents = exponents;
    fit.coefficients.resize(k);
    fit.errors.resize(k);
    for (int j = 0; j < k; ++j) {
        real_fit c = 0;
        for (int l = 0; l < k; ++l) c += V(j, l) * V(j, l) / (sv(l) * sv(l));
        fit.coefficients[j] = x(j) / scale(j);
        fit.errors[j] = rms * std::sqrt(c) / scale(j);
    }
    fit.ladder = samples;
    fit.model_failure = fit.relative_residual > guard.residual_cap;
    return fit;
}

PowerLawFit fit_power_law(const std::vector<Sample>& samples, real_fit noise_floor) {
    std::vector<std::pair<real_fit, real_fit>> pts;
    for (const auto& s : samples)
        if (s.eps > 0 && std::abs(s.value) > noise_floor && s.value != 0)
            pts.push_back({std::log(s.eps), std::log(std::abs(s.value))});
    require(pts.size() >= 3, ErrorCode::fit, "fit_power_law: fewer than 3 samples above the noise floor");
    real_fit sx = 0, sy = 0, sxx = 0, sxy = 0;
    const real_fit n = static_cast<real_fit>(pts.size());
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const real_fit den = n * sxx - sx * sx;
    require(den > 0, ErrorCode::fit, "fit_power_law: degenerate ladder");
    const real_fit slope = (n * sxy - sx * sy) / den;
    const real_fit icpt = (sy - slope * sx) / n;
    PowerLawFit f;
    f.exponent = static_cast<double>(slope);
    f.coefficient = std::exp(icpt);
    for (const auto& [x, y] : pts) f.log_residual = std::max(f.log_residual, std::abs(icpt + slope * x - y));
    f.used = static_cast<int>(pts.size());
    f.noise_floor = noise_floor;
    return f;
}

StitchReport stitch(std::vector<WindowFit> fits, const StitchBudget& budget, const FitGuard& guard) {
    StitchReport rep;
    std::sort(fits.begin(), fits.end(), [](const WindowFit& a, const WindowFit& b) { return a.n < b.n; });
    for (const auto& f : fits) rep.windows.push_back(f.n);
    if (fits.empty()) return rep;
    if (fits.size() == 1) {
        rep.global = fits[0].fit;
        return rep;
    }
    const auto& ex = fits[0].fit.exponents;
    for (const auto& f : fits)
        require(f.fit.exponents == ex, ErrorCode::fit, "stitch: windows use different exponent sets");
    for (size_t w = 0; w + 1 < fits.size(); ++w) {
        const auto& A = fits[w];
        const auto& B = fits[w + 1];
        for (size_t j = 0; j < ex.size(); ++j) {
            const real_fit a = A.fit.coefficients[j], b = B.fit.coefficients[j];
            const real_fit d = std::abs(a - b);
            const real_fit allowed = budget.sigma_factor * (A.fit.errors[j] + B.fit.errors[j]) +
                                     budget.relative_floor * std::max(std::abs(a), std::abs(b)) +
                                     budget.absolute_floor;
            if (d > allowed) {
                rep.consistent = false;
                rep.certificate.push_back({ex[j], A.n, B.n, a, b, d, allowed});
            }
        }
    }
    if (rep.consistent) {
        std::vector<Sample> all;
        std::map<real_fit, real_fit> seen;
        for (const auto& f : fits)
            for (const auto& s : f.fit.ladder)
                if (seen.emplace(s.eps, s.value).second) all.push_back(s);
        std::sort(all.begin(), all.end(), [](const Sample& a, const Sample& b) { return a.eps > b.eps; });
        rep.global = fit_expansion(all, ex, guard);
    }
    return rep;
}

}  // namespace qpg
