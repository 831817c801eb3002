// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <span>

#include "curefit/data.hpp"

namespace curefit {

// Model parameters theta = (alpha, beta, lambda): logistic coefficients for
// the incidence part, Cox coefficients for the latency part, and the baseline
// hazard jump masses at the dataset's event times.
struct ModelParams {
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta;
    Eigen::VectorXd lambda;  // all entries > 0, one per event time
};

// p = expit(alpha . z1), evaluated in a form stable for |alpha . z1| up to
// several hundred.
double cure_prob(const Eigen::VectorXd& alpha, const Eigen::VectorXd& z1);

// S(t | z2) = exp(-Lambda(t) e^{beta . z2}) for 0 <= t < tau; Lambda is the
// left-closed step sum over event times.
double survival(const ModelParams& params, std::span<const double> event_times,
                const Eigen::VectorXd& z2, double t, double tau);

// f(t_k) = lambda_k e^{beta . z2} S(t_k) with S inclusive of the jump at t_k.
// k is 0-based.
double event_mass(const ModelParams& params, std::span<const double> event_times,
                  const Eigen::VectorXd& z2, int k);

// phi(t) = P(uncured | still event-free at t)
//        = e^{alpha.z1 - Lambda(t) e^{beta.z2}} / (1 + same) = pS/(1-p+pS).
double posterior_uncured_phi(const ModelParams& params, std::span<const double> event_times,
                             const Eigen::VectorXd& z1, const Eigen::VectorXd& z2, double t);

// Observed-data log-likelihood: per subject, the log of
//   {p lambda_k e^{b.z} S(X)}^{d1} (1-p)^{d0} {1-p+pS(X)}^{dc} / {1-p+pS(Q)}.
double observed_loglik(const ModelParams& params, const Dataset& data);

// Same as observed_loglik except each denominator is
//   1 - p * sum_{k: t_k < Q} f(t_k),
// the exact marginal of the ghost-augmented complete-data likelihood; this is
// the objective whose stationary point the EM finds.
double marginal_loglik_tilde(const ModelParams& params, const Dataset& data);

}  // namespace curefit
