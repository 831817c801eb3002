// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#include "curefit/em.hpp"

#include <algorithm>
#include <cmath>

#include "curefit/variance.hpp"

namespace curefit {

ModelParams initialize(const Dataset& data, const EMConfig& cfg) {
    ModelParams params;
    try {
        params.alpha = naive_logistic_fit(data, /*exclude_censored=*/true, cfg.solver).alpha;
    } catch (const SeparationError&) {
        params.alpha = Eigen::VectorXd::Zero(data.dim_z1());
    }
    const CoxFit cox = naive_cox_fit(data, cfg.solver);
    params.beta = cox.beta;
    params.lambda = cox.lambda;
    return params;
}

EMWeights e_step(const ModelParams& params, const Dataset& data) {
    const int n = data.n();
    const StepHazard hz(data.event_times, params.lambda);

    EMWeights w;
    w.logistic.w0 = Eigen::VectorXd::Zero(n);
    w.logistic.w1 = Eigen::VectorXd::Zero(n);
    w.cox.subjects.resize(n);
    w.latents.resize(n);

    for (int i = 0; i < n; ++i) {
        const auto& s = data.subjects[i];
        auto& lat = w.latents[i];
        auto& cw = w.cox.subjects[i];
        const double p = cure_prob(params.alpha, s.z1);
        const double rel = std::exp(params.beta.dot(s.z2));

        // Ghost-copy distribution over event times strictly below the entry.
        const int m = hz.count_below(s.entry);
        double mass = 0.0;
        lat.ghost_pmf.assign(m, 0.0);
        for (int k = 0; k < m; ++k) {
            lat.ghost_pmf[k] = params.lambda[k] * rel * std::exp(-hz.cum_at(k) * rel);
            mass += lat.ghost_pmf[k];
        }
        const double q = p * mass;
        if (q >= 1.0)
            throw GhostMassOverflowError("ghost mass >= 1 for subject '" + s.id +
                                         "' (baseline mass below the entry time too large)");
        if (mass > 0.0) {
            for (int k = 0; k < m; ++k) lat.ghost_pmf[k] /= mass;
            lat.e_m = q / (1.0 - q);
            lat.var_m = q / ((1.0 - q) * (1.0 - q));
            lat.e_m2m = 2.0 * q * q / ((1.0 - q) * (1.0 - q));
        } else {
            lat.ghost_pmf.clear();
        }

        switch (s.status) {
            case Status::Event:
                lat.e_a = 1.0;
                cw.event_index = s.event_index;
                break;
            case Status::Cured:
                lat.e_a = 0.0;
                break;
            case Status::Censored: {
                const double surv = std::exp(-hz.cum(s.time) * rel);
                lat.e_a = p * surv / (1.0 - p + p * surv);
                lat.var_a = lat.e_a * (1.0 - lat.e_a);
                cw.tail_mass = lat.e_a;
                break;
            }
        }

        cw.ghost_mass.assign(lat.ghost_pmf.size(), 0.0);
        for (size_t k = 0; k < lat.ghost_pmf.size(); ++k)
            cw.ghost_mass[k] = lat.e_m * lat.ghost_pmf[k];

        const double d0 = s.status == Status::Cured ? 1.0 : 0.0;
        const double dc = s.status == Status::Censored ? 1.0 : 0.0;
        w.logistic.w0[i] = d0 + dc * (1.0 - lat.e_a);
        w.logistic.w1[i] = lat.e_a + lat.e_m;
    }
    return w;
}

ModelParams m_step(const EMWeights& weights, const Dataset& data, const ModelParams& warm,
                   const EMConfig& cfg) {
    const int n = data.n();
    Eigen::MatrixXd rows(n, data.dim_z1());
    for (int i = 0; i < n; ++i) rows.row(i) = data.subjects[i].z1.transpose();

    ModelParams next;
    next.alpha = weighted_logistic_fit(rows, weights.logistic, warm.alpha, cfg.solver);
    const CoxFit cox = weighted_cox_fit(weights.cox, data, warm.beta, cfg.solver);
    next.beta = cox.beta;
    next.lambda = cox.lambda;
    return next;
}

namespace {

double max_param_change(const ModelParams& a, const ModelParams& b) {
    double d = (a.alpha - b.alpha).lpNorm<Eigen::Infinity>();
    if (a.beta.size() > 0) d = std::max(d, (a.beta - b.beta).lpNorm<Eigen::Infinity>());
    for (Eigen::Index k = 0; k < a.lambda.size(); ++k)
        d = std::max(d, std::abs(std::log(a.lambda[k]) - std::log(b.lambda[k])));
    return d;
}

}  // namespace

FitResult fit_em(const Dataset& data, const EMConfig& cfg) {
    FitResult res;
    ModelParams params = initialize(data, cfg);
    double prev_ll = marginal_loglik_tilde(params, data);

    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        const EMWeights weights = e_step(params, data);
        ModelParams next = m_step(weights, data, params, cfg);
        const double ll = marginal_loglik_tilde(next, data);
        const double change = max_param_change(next, params);
        res.trace.push_back({ll, change});
        res.iterations = iter;
        params = std::move(next);
        if (change < cfg.param_tol && std::abs(ll - prev_ll) < cfg.loglik_tol) {
            res.converged = true;
            prev_ll = ll;
            break;
        }
        prev_ll = ll;
    }

    res.params = std::move(params);
    res.loglik_tilde = prev_ll;
    res.loglik_observed = observed_loglik(res.params, data);
    res.baseline_residual = baseline_selfconsistency_residual(res.params, data);

    if (cfg.compute_covariance) {
        try {
            const InformationMatrix info = louis_information(res.params, data);
            res.score_supnorm = info.score_supnorm;
            res.stationarity_warning = info.score_supnorm > 1e-4;
            const CovarianceResult cov = covariance_and_se(info);
            res.covariance = cov.covariance;
            res.se_alpha = cov.se_alpha;
            res.se_beta = cov.se_beta;
        } catch (const Error&) {
            // A failed variance step on a non-converged fit still yields a
            // usable partial result; at a converged fit it is a real error.
            if (res.converged) throw;
        }
    }
    return res;
}

double baseline_selfconsistency_residual(const ModelParams& params, const Dataset& data) {
    const int K = data.num_event_times();
    const StepHazard hz(data.event_times, params.lambda);

    Eigen::VectorXd denom = Eigen::VectorXd::Zero(K);
    Eigen::VectorXd dbar = Eigen::VectorXd::Zero(K);
    for (int i = 0; i < data.n(); ++i) {
        const auto& s = data.subjects[i];
        const double rel = std::exp(params.beta.dot(s.z2));
        double head = 0.0;  // {d1 + dc phi(X)} coefficient
        if (s.status == Status::Event) {
            head = 1.0;
            dbar[s.event_index] += 1.0;
        } else if (s.status == Status::Censored) {
            head = posterior_uncured_phi(params, data.event_times, s.z1, s.z2, s.time);
        }
        // Bucket + suffix-sum representation of 1{t_k <= X} and 1{t_k <= Q}.
        if (head != 0.0) {
            const int kx = hz.last_at_or_before(s.time);
            if (kx >= 0) denom[kx] += head * rel;
        }
        const int kq = hz.last_at_or_before(s.entry);
        if (kq >= 0) {
            const double phi_q =
                posterior_uncured_phi(params, data.event_times, s.z1, s.z2, s.entry);
            denom[kq] -= phi_q * rel;
        }
    }
    for (int k = K - 2; k >= 0; --k) denom[k] += denom[k + 1];

    double resid = 0.0;
    for (int k = 0; k < K; ++k) {
        if (!(denom[k] > 0.0))
            throw Error("nonpositive self-consistency denominator at event time t_" +
                        std::to_string(k + 1));
        resid = std::max(resid, std::abs(params.lambda[k] - dbar[k] / denom[k]) / params.lambda[k]);
    }
    return resid;
}

}  // namespace curefit
