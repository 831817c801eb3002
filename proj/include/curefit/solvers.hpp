// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "curefit/data.hpp"

namespace curefit {

// Per-subject case weights for the incidence part: w0 is mass on the cured
// outcome, w1 on the uncured one. Ghost copies inflate w1, so w0 + w1 may
// exceed 1.
struct LogisticWeights {
    Eigen::VectorXd w0;
    Eigen::VectorXd w1;
};

// Per-subject latency weights. Event mass is stored sparsely: the subject's
// own event (mass 1 at event_index) plus ghost masses on the prefix of event
// times strictly below its entry time.
struct CoxWeights {
    struct Subject {
        int event_index = -1;            // own event, -1 if none
        double tail_mass = 0.0;          // w^S: weight on log S(X)
        std::vector<double> ghost_mass;  // ghost_mass[k] at event time k < entry
    };
    std::vector<Subject> subjects;
    // When set, a subject's at-risk mass at t_k is zeroed for t_k <= entry
    // (risk interval (Q, X]); the ghost-copy weights instead account for
    // truncation with risk from the origin.
    bool risk_from_entry = false;

    // Dense accessor w^f_{i,k}, mainly for tests.
    double event_mass_at(int i, int k) const;
};

struct SolverConfig {
    double tol = 1e-8;      // sup-norm of the score at convergence
    int max_iter = 100;
    int step_halvings = 30;
};

// Objective and analytic score of the weighted logistic log-likelihood
//   l(alpha) = sum_i w0_i log(1-p_i) + w1_i log p_i.
double weighted_logistic_loglik(const Eigen::MatrixXd& z1_rows, const LogisticWeights& weights,
                                const Eigen::VectorXd& alpha);
Eigen::VectorXd weighted_logistic_score(const Eigen::MatrixXd& z1_rows,
                                        const LogisticWeights& weights,
                                        const Eigen::VectorXd& alpha);

// Newton maximization with step halving. Throws SeparationError when the
// iterates leave the ||alpha||_inf <= 50 box, MaxIterError past cfg.max_iter.
Eigen::VectorXd weighted_logistic_fit(const Eigen::MatrixXd& z1_rows,
                                      const LogisticWeights& weights,
                                      const Eigen::VectorXd& init, const SolverConfig& cfg);

// Closed-form stationary baseline jumps for fixed beta:
//   lambda_k = D_k / R_k(beta),  D_k = sum_i w^f_{i,k},
//   R_k = sum_i e^{beta.z2_i} a_i(t_k),
//   a_i(t_k) = sum_{h >= k} w^f_{i,h} + w^S_i 1{X_i >= t_k}.
Eigen::VectorXd profile_lambda(const Eigen::VectorXd& beta, const CoxWeights& weights,
                               const Dataset& data);

// Profiled objective l(beta, lambda_hat(beta)) of
//   l = sum_{i,k} w^f_{i,k} log f_i(t_k) + sum_i w^S_i log S_i(X_i)
// and its analytic score sum_{i,k} w^f_{i,k} {z2_i - zbar(t_k; beta)}.
double weighted_cox_profiled_loglik(const Eigen::VectorXd& beta, const CoxWeights& weights,
                                    const Dataset& data);
Eigen::VectorXd weighted_cox_profiled_score(const Eigen::VectorXd& beta, const CoxWeights& weights,
                                            const Dataset& data);

struct CoxFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd lambda;
    // Negative Hessian of the profiled objective at beta (the partial-
    // likelihood information); used for naive-model standard errors.
    Eigen::MatrixXd neg_hessian;
};

// Newton on the profiled objective with step halving; returns beta with
// profiled score sup-norm <= cfg.tol and lambda = profile_lambda(beta).
CoxFit weighted_cox_fit(const CoxWeights& weights, const Dataset& data,
                        const Eigen::VectorXd& init_beta, const SolverConfig& cfg);

// Classical left-truncated Cox-Breslow fit treating cured subjects as
// censored at tau: unit own-event masses, unit tail masses, risk from entry.
CoxFit naive_cox_fit(const Dataset& data, const SolverConfig& cfg);

struct LogisticFit {
    Eigen::VectorXd alpha;
    Eigen::MatrixXd neg_hessian;  // information at alpha
};

// Plain logistic regression of event vs non-event. With exclude_censored the
// censored subjects are dropped; otherwise they count as non-events.
LogisticFit naive_logistic_fit(const Dataset& data, bool exclude_censored,
                               const SolverConfig& cfg);

}  // namespace curefit
