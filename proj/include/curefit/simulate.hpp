// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "curefit/em.hpp"

namespace curefit {

// Study design: cohorts with Z1 ~ N(4,1), Z2 ~ Bernoulli(0.3), a logistic
// cure mixture, event times T = tau {1 - U^exp(-beta.z)} below the horizon
// tau = 20, entry times Uniform(0, a) and censoring times Uniform(15, b).
struct SimConfig {
    int n = 200;
    Eigen::VectorXd alpha_true;  // (intercept, z1, z2)
    Eigen::VectorXd beta_true;   // (z1, z2)
    double tau = 20.0;
    double trunc_target = 0.0;            // desired P(T <= Q | uncured)
    double cens_target = 0.0;             // desired P(C < min(T, tau)) in the retained sample
    std::optional<double> trunc_bound;    // explicit a < 15, overrides calibration
    std::optional<double> cens_bound;     // explicit b > 20, overrides calibration
    std::uint64_t master_seed = 1;
    int n_trials = 1;
    EMConfig em;

    static SimConfig table1_truth() {
        SimConfig cfg;
        cfg.alpha_true = (Eigen::VectorXd(3) << 1.0, -0.63, 1.0).finished();
        cfg.beta_true = (Eigen::VectorXd(2) << -0.20, 0.30).finished();
        return cfg;
    }
};

struct StudySummary {
    struct ParamRow {
        std::string name;
        double truth;
        double estimate_mean;
        double sample_sd;  // NaN when fewer than two converged trials
        double mean_se;
        double coverage_95;
    };
    std::vector<ParamRow> params;
    double trunc_bound = 0.0;  // calibrated or explicit a (0 = no truncation)
    double cens_bound = 0.0;   // calibrated or explicit b (0 = no censoring)
    int n_trials = 0;
    int n_converged = 0;
    int n_nonconverged = 0;
    int n_failed = 0;  // trials that raised an error
};

// One simulated cohort; trial_index selects the RNG stream. Requires the
// truncation/censoring bounds to be resolved (explicit or pre-calibrated).
Dataset gen_trial(const SimConfig& cfg, int trial_index);

// Bisection on a in (0.01, 14.99) against a fixed-seed Monte Carlo estimate
// of P(T <= Q | uncured), to within half a percentage point of the target.
double calibrate_truncation_bound(const SimConfig& cfg);

// Bisection on b in (20.01, 2000) against a Monte Carlo estimate of
// P(C < min(T, tau)) among retained subjects; decreasing in b.
double calibrate_censoring_bound(const SimConfig& cfg);

// Monte Carlo study: per-trial fits with Louis standard errors and 95%
// coverage indicators, aggregated in trial order. Trials fan out over
// n_jobs threads; the summary is bit-identical for a given (cfg, seed).
StudySummary run_study(const SimConfig& cfg, int n_jobs = 1);

}  // namespace curefit
