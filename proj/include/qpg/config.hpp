#pragma once

#include "qpg/almost.hpp"
#include "qpg/gauge.hpp"
#include "qpg/potential.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qpg {

struct EpsilonSpec {
    quad max = quad(1e-3);
    int points = 12;
    quad ratio = 2;
};

struct OracleSpec {
    int M = 6;       // truncated fiber order
    int grid = 4096; // sup grid / quadrature samples per unit
};

struct ScheduleSpec {
    std::string eps0 = "1e-30";
    int n_max = 6;
};

struct SuperresSpec {
    int depth = 3;
    double xi_lo = 1, xi_hi = 3;
    int enumerate_order = 24;
};

struct ControlSpec {
    std::vector<CoefEntry> coefficients;
    quad tau = 0;
    std::string lambda = "1.7";
    std::string eps0 = "1e-6";
    int first_window = 0, windows = 4, points = 8;
};

struct ExperimentConfig {
    std::string name;
    std::vector<std::string> basis;
    std::vector<Freq> theta;
    std::vector<CoefEntry> coefficients;  // when no decay rule
    std::optional<DecayRule> decay;
    int decay_L = 1;                       // truncation order used for the decay rule
    quad tau = 0;
    int N = 3;
    double P0 = 1;
    EpsilonSpec epsilon;
    OracleSpec oracle;
    std::optional<quad> delta;             // zone width override
    Mollifier mollifier = Mollifier::exp1;
    std::optional<std::string> lambda;     // default energy for ids-scan / classify
    std::optional<Freq> gap_theta;         // default theta for gap-scan
    ScheduleSpec schedule;
    SuperresSpec superres;
    std::optional<ControlSpec> control;
    std::string source;                    // resolved config, canonical JSON

    BasisPtr basis_ptr() const;
    PotentialSpec potential() const;
    std::optional<PotentialSpec> control_potential() const;
    ZoneSpec zones(const PotentialSpec& V) const;
    GaugeOptions gauge_options() const;
    std::vector<quad> ladder() const;
    ScheduleParams schedule_params() const;
};

// Schema violations throw Error(config) with the JSON pointer of the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// "1,0" or "[1,0]" -> coefficients over the basis.
Freq parse_freq(const std::string& text, int dim);

}  // namespace qpg
