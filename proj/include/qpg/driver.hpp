#pragma once

#include "qpg/config.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qpg {

struct RunOutput {
    std::string json;
    std::string csv;
};

// "1e-3,5e-4,..." lists the values; "max:points[:ratio]" is a geometric ladder.
std::vector<quad> parse_ladder(const std::string& text);

// CSV: eps,sigma_minus_max,sigma_plus_min,gap,hill_lower,hill_upper,hill_gap,err_lower,err_upper
RunOutput gap_scan(const ExperimentConfig& c, const std::optional<Freq>& theta,
                   const std::optional<std::vector<quad>>& ladder);

// CSV: eps,ids,deviation,hill,truncated,err_truncated
RunOutput ids_scan(const ExperimentConfig& c, const std::optional<std::string>& lambda,
                   const std::optional<std::vector<quad>>& ladder);

std::string classify_json(const ExperimentConfig& c, const std::optional<std::string>& lambda);

// CSV: xi,G,zone (zone index, -1 off zones). xi_max <= 0 picks 2 max|theta| + 1 over Theta_N.
std::string g_scan(const ExperimentConfig& c, quad eps, double xi_max, int samples);

std::string superres_json(const ExperimentConfig& c, std::optional<int> depth);

struct SelfcheckResult {
    bool passed = false;
    std::string json;
};
SelfcheckResult selfcheck(const ExperimentConfig& c);

}  // namespace qpg
