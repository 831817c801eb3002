// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "curefit/model.hpp"
#include "curefit/solvers.hpp"

namespace curefit {

// Per-subject conditional moments of the latent variables: the uncured
// indicator A, the ghost-copy count M (geometric), and the ghost event-time
// distribution over the event times strictly below the subject's entry time.
struct LatentSummaries {
    double e_a = 0.0;    // E[A | O], in [0, 1]
    double e_m = 0.0;    // E[M | O]
    double var_a = 0.0;  // nonzero only for censored subjects
    double var_m = 0.0;
    double e_m2m = 0.0;  // E[M^2 - M | O] = 2 q^2 / (1-q)^2
    std::vector<double> ghost_pmf;  // P(T~ = t_k | O) for k below the entry time
};

struct EMWeights {
    LogisticWeights logistic;
    CoxWeights cox;
    std::vector<LatentSummaries> latents;
};

struct EMConfig {
    double param_tol = 1e-6;   // sup-norm over alpha, beta and log lambda
    double loglik_tol = 1e-8;
    int max_iter = 500;
    SolverConfig solver;
    bool compute_covariance = true;
};

struct FitResult {
    ModelParams params;
    Eigen::MatrixXd covariance;  // over the (alpha | beta | lambda) blocks
    Eigen::VectorXd se_alpha;
    Eigen::VectorXd se_beta;
    double loglik_observed = 0.0;
    double loglik_tilde = 0.0;
    struct TraceEntry {
        double loglik_tilde;
        double max_change;
    };
    std::vector<TraceEntry> trace;
    int iterations = 0;
    bool converged = false;
    double baseline_residual = 0.0;
    // Sup-norm of the summed expected complete-data score at the final
    // parameters; large values invalidate the Louis variance.
    double score_supnorm = 0.0;
    bool stationarity_warning = false;
};

// Starting values: naive logistic without censored subjects (zero vector on
// separation) and naive left-truncated Cox with cured censored at tau.
ModelParams initialize(const Dataset& data, const EMConfig& cfg);

// Closed-form E-step. Throws GhostMassOverflowError when some subject's
// ghost mass p * sum_{t_k < Q} f(t_k) reaches 1.
EMWeights e_step(const ModelParams& params, const Dataset& data);

// One M-step: weighted logistic for alpha, weighted Cox for (beta, lambda),
// both warm-started at the current iterate.
ModelParams m_step(const EMWeights& weights, const Dataset& data, const ModelParams& warm,
                   const EMConfig& cfg);

// Full EM driver; populates the Louis covariance and the baseline
// self-consistency residual on the result.
FitResult fit_em(const Dataset& data, const EMConfig& cfg = {});

// Relative sup-norm residual of the baseline self-consistency equation
//   lambda_k = dNbar(t_k) / sum_i W_i(t_k) e^{beta.z2_i},
//   W_i(t) = {d1_i + dc_i phi_i(X_i)} 1{t <= X_i} - phi_i(Q_i) 1{t <= Q_i}.
// Zero (to solver tolerance) at a converged fit without truncation.
double baseline_selfconsistency_residual(const ModelParams& params, const Dataset& data);

}  // namespace curefit
