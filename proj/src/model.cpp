// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#include "curefit/model.hpp"

#include <cmath>

namespace curefit {

namespace {

void check_lambda(const ModelParams& params, std::span<const double> event_times) {
    if (static_cast<size_t>(params.lambda.size()) != event_times.size())
        throw DimensionError("lambda does not match the event times");
    for (Eigen::Index k = 0; k < params.lambda.size(); ++k)
        if (!(params.lambda[k] > 0.0) || !std::isfinite(params.lambda[k]))
            throw Error("lambda[" + std::to_string(k) + "] must be positive and finite");
}

double dot_checked(const Eigen::VectorXd& coef, const Eigen::VectorXd& z, const char* what) {
    if (coef.size() != z.size()) throw DimensionError(std::string("dimension mismatch in ") + what);
    return coef.dot(z);
}

}  // namespace

double cure_prob(const Eigen::VectorXd& alpha, const Eigen::VectorXd& z1) {
    const double eta = dot_checked(alpha, z1, "cure_prob");
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double survival(const ModelParams& params, std::span<const double> event_times,
                const Eigen::VectorXd& z2, double t, double tau) {
    if (t >= tau) throw Error("survival evaluated at t >= tau");
    if (t < 0.0) throw Error("survival evaluated at t < 0");
    check_lambda(params, event_times);
    const StepHazard hz(event_times, params.lambda);
    const double rel = std::exp(dot_checked(params.beta, z2, "survival"));
    return std::exp(-hz.cum(t) * rel);
}

double event_mass(const ModelParams& params, std::span<const double> event_times,
                  const Eigen::VectorXd& z2, int k) {
    check_lambda(params, event_times);
    if (k < 0 || static_cast<size_t>(k) >= event_times.size())
        throw Error("event time index out of range");
    const StepHazard hz(event_times, params.lambda);
    const double rel = std::exp(dot_checked(params.beta, z2, "event_mass"));
    return params.lambda[k] * rel * std::exp(-hz.cum_at(k) * rel);
}

double posterior_uncured_phi(const ModelParams& params, std::span<const double> event_times,
                             const Eigen::VectorXd& z1, const Eigen::VectorXd& z2, double t) {
    check_lambda(params, event_times);
    const StepHazard hz(event_times, params.lambda);
    const double rel = std::exp(dot_checked(params.beta, z2, "posterior_uncured_phi"));
    const double eta = dot_checked(params.alpha, z1, "posterior_uncured_phi") - hz.cum(t) * rel;
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

namespace {

// Shared accumulation for the observed and marginal log-likelihoods; the two
// differ only in the per-subject conditioning denominator.
double loglik_impl(const ModelParams& params, const Dataset& data, bool marginal) {
    check_lambda(params, data.event_times);
    const StepHazard hz(data.event_times, params.lambda);

    double total = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const auto& s = data.subjects[i];
        const double p = cure_prob(params.alpha, s.z1);
        const double rel = std::exp(params.beta.dot(s.z2));

        double ll = 0.0;
        switch (s.status) {
            case Status::Event:
                ll = std::log(p) + std::log(params.lambda[s.event_index]) +
                     params.beta.dot(s.z2) - hz.cum_at(s.event_index) * rel;
                break;
            case Status::Cured:
                ll = std::log1p(-p);
                break;
            case Status::Censored:
                ll = std::log(1.0 - p + p * std::exp(-hz.cum(s.time) * rel));
                break;
        }

        if (marginal) {
            // Ghost-copy normalization: mass of the discretized event-time
            // distribution strictly below the entry time.
            double mass = 0.0;
            const int m = hz.count_below(s.entry);
            for (int k = 0; k < m; ++k)
                mass += params.lambda[k] * rel * std::exp(-hz.cum_at(k) * rel);
            const double denom = 1.0 - p * mass;
            if (!(denom > 0.0))
                throw Error("marginal denominator <= 0 for subject '" + s.id +
                            "' (baseline mass below the entry time too large)");
            ll -= std::log(denom);
        } else {
            ll -= std::log(1.0 - p + p * std::exp(-hz.cum(s.entry) * rel));
        }
        total += ll;
    }
    if (!std::isfinite(total)) throw Error("log-likelihood is not finite");
    return total;
}

}  // namespace

double observed_loglik(const ModelParams& params, const Dataset& data) {
    return loglik_impl(params, data, false);
}

double marginal_loglik_tilde(const ModelParams& params, const Dataset& data) {
    return loglik_impl(params, data, true);
}

}  // namespace curefit
