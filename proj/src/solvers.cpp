// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#include "curefit/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace curefit {

namespace {

double softplus(double x) { return x > 35.0 ? x : std::log1p(std::exp(x)); }

constexpr double kSeparationBox = 50.0;

}  // namespace

double CoxWeights::event_mass_at(int i, int k) const {
    const auto& s = subjects[i];
    double m = 0.0;
    if (k == s.event_index) m += 1.0;
    if (k >= 0 && static_cast<size_t>(k) < s.ghost_mass.size()) m += s.ghost_mass[k];
    return m;
}

// ---------------------------------------------------------------------------
// Weighted logistic regression
// ---------------------------------------------------------------------------

double weighted_logistic_loglik(const Eigen::MatrixXd& z1_rows, const LogisticWeights& weights,
                                const Eigen::VectorXd& alpha) {
    if (z1_rows.cols() != alpha.size()) throw DimensionError("logistic design/coef mismatch");
    double ll = 0.0;
    for (Eigen::Index i = 0; i < z1_rows.rows(); ++i) {
        const double eta = z1_rows.row(i).dot(alpha);
        const double w0 = weights.w0[i], w1 = weights.w1[i];
        if (w1 > 0.0) ll -= w1 * softplus(-eta);  // w1 log p
        if (w0 > 0.0) ll -= w0 * softplus(eta);   // w0 log(1-p)
    }
    return ll;
}

Eigen::VectorXd weighted_logistic_score(const Eigen::MatrixXd& z1_rows,
                                        const LogisticWeights& weights,
                                        const Eigen::VectorXd& alpha) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(alpha.size());
    for (Eigen::Index i = 0; i < z1_rows.rows(); ++i) {
        const double eta = z1_rows.row(i).dot(alpha);
        const double p = eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta))
                                    : std::exp(eta) / (1.0 + std::exp(eta));
        g += (weights.w1[i] - (weights.w0[i] + weights.w1[i]) * p) * z1_rows.row(i).transpose();
    }
    return g;
}

namespace {

Eigen::MatrixXd weighted_logistic_neg_hessian(const Eigen::MatrixXd& z1_rows,
                                              const LogisticWeights& weights,
                                              const Eigen::VectorXd& alpha) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(alpha.size(), alpha.size());
    for (Eigen::Index i = 0; i < z1_rows.rows(); ++i) {
        const double eta = z1_rows.row(i).dot(alpha);
        const double p = eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta))
                                    : std::exp(eta) / (1.0 + std::exp(eta));
        const double w = (weights.w0[i] + weights.w1[i]) * p * (1.0 - p);
        if (w > 0.0) h.selfadjointView<Eigen::Lower>().rankUpdate(z1_rows.row(i).transpose(), w);
    }
    return h.selfadjointView<Eigen::Lower>();
}

// Solves H x = g for a supposedly positive-definite H, with one ridge retry.
Eigen::VectorXd solve_pd(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
    auto ldlt = h.ldlt();
    if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
        Eigen::VectorXd x = ldlt.solve(g);
        if (x.allFinite()) return x;
    }
    const double ridge = 1e-8 * (h.trace() / static_cast<double>(h.rows()));
    Eigen::MatrixXd hr = h;
    hr.diagonal().array() += std::max(ridge, 1e-300);
    auto ldlt2 = hr.ldlt();
    if (ldlt2.info() == Eigen::Success && (ldlt2.vectorD().array() > 0.0).all()) {
        Eigen::VectorXd x = ldlt2.solve(g);
        if (x.allFinite()) return x;
    }
    throw SingularHessianError("Newton system is singular");
}

}  // namespace

Eigen::VectorXd weighted_logistic_fit(const Eigen::MatrixXd& z1_rows,
                                      const LogisticWeights& weights,
                                      const Eigen::VectorXd& init, const SolverConfig& cfg) {
    const Eigen::Index n = z1_rows.rows();
    if (weights.w0.size() != n || weights.w1.size() != n)
        throw DimensionError("logistic weights do not match the design rows");
    for (Eigen::Index i = 0; i < n; ++i)
        if (weights.w0[i] < 0.0 || weights.w1[i] < 0.0 || !std::isfinite(weights.w0[i]) ||
            !std::isfinite(weights.w1[i]))
            throw Error("logistic weights must be finite and nonnegative");
    if (!(weights.w1.sum() > 0.0) || !(weights.w0.sum() > 0.0))
        throw SeparationError("logistic fit needs positive mass on both outcomes");

    // Supremum of the objective: rows carrying both outcome masses attain
    // their maximum at p = w1/(w0+w1), rows with one-sided mass asymptote to
    // zero. A fit that reaches the supremum has no finite maximizer.
    double l_sup = 0.0;
    double total_w = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w0 = weights.w0[i], w1 = weights.w1[i];
        total_w += w0 + w1;
        if (w0 > 0.0 && w1 > 0.0) {
            const double p = w1 / (w0 + w1);
            l_sup += w1 * std::log(p) + w0 * std::log1p(-p);
        }
    }

    Eigen::VectorXd alpha =
        init.size() == z1_rows.cols() ? init : Eigen::VectorXd::Zero(z1_rows.cols());
    double ll = weighted_logistic_loglik(z1_rows, weights, alpha);

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        const Eigen::VectorXd g = weighted_logistic_score(z1_rows, weights, alpha);
        if (g.lpNorm<Eigen::Infinity>() <= cfg.tol) {
            if (l_sup - ll <= 1e-7 * (1.0 + total_w))
                throw SeparationError("logistic objective reached its supremum (separated data)");
            return alpha;
        }

        const Eigen::MatrixXd h = weighted_logistic_neg_hessian(z1_rows, weights, alpha);
        Eigen::VectorXd step = solve_pd(h, g);

        double scale = 1.0;
        bool accepted = false;
        for (int half = 0; half <= cfg.step_halvings; ++half, scale *= 0.5) {
            const Eigen::VectorXd cand = alpha + scale * step;
            const double cand_ll = weighted_logistic_loglik(z1_rows, weights, cand);
            if (cand_ll >= ll - 1e-12 * (1.0 + std::abs(ll))) {
                alpha = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw NonConcaveError("logistic Newton step failed to ascend");
        if (alpha.lpNorm<Eigen::Infinity>() > kSeparationBox)
            throw SeparationError("logistic coefficients diverged (separated data)");
    }
    throw MaxIterError("weighted logistic fit exceeded max_iter");
}

// ---------------------------------------------------------------------------
// Weighted Cox with profiled Breslow-type baseline
// ---------------------------------------------------------------------------

namespace {

// Precomputed per-(weights, data) quantities that do not depend on beta.
struct CoxContext {
    const Dataset& data;
    const CoxWeights& weights;
    int K;
    // Largest event-time index with t_k <= X_i (own-event index for events).
    std::vector<int> risk_end;
    // First index with t_k > Q_i; at-risk mass zeroed below it when
    // risk_from_entry is set.
    std::vector<int> risk_begin;
    Eigen::VectorXd total_event_mass;    // D_k
    Eigen::MatrixXd event_mass_z;        // sum_i w^f_{i,k} z2_i, K x d2
    Eigen::VectorXd subject_mass;        // c_i = sum_k w^f_{i,k}
    double sum_d = 0.0;

    CoxContext(const CoxWeights& w, const Dataset& d) : data(d), weights(w) {
        K = d.num_event_times();
        const int n = d.n();
        if (static_cast<int>(w.subjects.size()) != n)
            throw DimensionError("cox weights do not match the dataset");
        const auto& times = d.event_times;
        risk_end.resize(n);
        risk_begin.assign(n, 0);
        total_event_mass = Eigen::VectorXd::Zero(K);
        event_mass_z = Eigen::MatrixXd::Zero(K, d.dim_z2());
        subject_mass = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) {
            const auto& s = d.subjects[i];
            const auto& ws = w.subjects[i];
            risk_end[i] = static_cast<int>(std::upper_bound(times.begin(), times.end(),
                                                            s.time) - times.begin()) - 1;
            if (w.risk_from_entry)
                risk_begin[i] = static_cast<int>(std::upper_bound(times.begin(), times.end(),
                                                                  s.entry) - times.begin());
            if (ws.event_index >= 0) {
                total_event_mass[ws.event_index] += 1.0;
                event_mass_z.row(ws.event_index) += s.z2.transpose();
                subject_mass[i] += 1.0;
            }
            for (size_t k = 0; k < ws.ghost_mass.size(); ++k) {
                const double m = ws.ghost_mass[k];
                if (m == 0.0) continue;
                if (m < 0.0 || !std::isfinite(m)) throw Error("negative or non-finite ghost mass");
                total_event_mass[static_cast<Eigen::Index>(k)] += m;
                event_mass_z.row(static_cast<Eigen::Index>(k)) += m * s.z2.transpose();
                subject_mass[i] += m;
            }
            if (ws.tail_mass < 0.0 || !std::isfinite(ws.tail_mass))
                throw Error("negative or non-finite tail mass");
        }
        for (int k = 0; k < K; ++k)
            if (!(total_event_mass[k] > 0.0))
                throw Error("event time t_" + std::to_string(k + 1) +
                            " carries no event mass (corrupt weights)");
        sum_d = total_event_mass.sum();
    }

    // Risk aggregates for fixed beta: R_k, and optionally the risk-weighted
    // z2 first and second moments needed by the profiled score and Hessian.
    void accumulate(const Eigen::VectorXd& beta, Eigen::VectorXd& risk, Eigen::MatrixXd* risk_z,
                    std::vector<Eigen::MatrixXd>* risk_zz) const {
        const int n = data.n();
        const int d2 = data.dim_z2();
        risk = Eigen::VectorXd::Zero(K);
        if (risk_z) *risk_z = Eigen::MatrixXd::Zero(K, d2);
        if (risk_zz) risk_zz->assign(K, Eigen::MatrixXd::Zero(d2, d2));
        for (int i = 0; i < n; ++i) {
            const auto& s = data.subjects[i];
            const auto& ws = weights.subjects[i];
            const double r = std::exp(beta.dot(s.z2));
            const double base = (ws.event_index >= 0 ? 1.0 : 0.0) + ws.tail_mass;
            // Own event and tail both cover event times up to X_i; a
            // difference bucket at risk_begin-1 cuts the part at or below Q_i.
            if (base > 0.0 && risk_end[i] >= risk_begin[i]) {
                add(risk, risk_z, risk_zz, i, risk_end[i], r * base);
                if (risk_begin[i] > 0) add(risk, risk_z, risk_zz, i, risk_begin[i] - 1, -r * base);
            }
            for (size_t k = 0; k < ws.ghost_mass.size(); ++k)
                if (ws.ghost_mass[k] != 0.0)
                    add(risk, risk_z, risk_zz, i, static_cast<int>(k), r * ws.ghost_mass[k]);
        }
        // Suffix sums turn the buckets into sums over {h >= k}.
        for (int k = K - 2; k >= 0; --k) {
            risk[k] += risk[k + 1];
            if (risk_z) risk_z->row(k) += risk_z->row(k + 1);
            if (risk_zz) (*risk_zz)[k] += (*risk_zz)[k + 1];
        }
    }

   private:
    void add(Eigen::VectorXd& risk, Eigen::MatrixXd* risk_z, std::vector<Eigen::MatrixXd>* risk_zz,
             int i, int k, double mass) const {
        risk[k] += mass;
        if (risk_z) risk_z->row(k) += mass * data.subjects[i].z2.transpose();
        if (risk_zz)
            (*risk_zz)[k] += mass * (data.subjects[i].z2 * data.subjects[i].z2.transpose());
    }
};

Eigen::VectorXd profile_lambda_impl(const CoxContext& ctx, const Eigen::VectorXd& beta) {
    Eigen::VectorXd risk;
    ctx.accumulate(beta, risk, nullptr, nullptr);
    Eigen::VectorXd lambda(ctx.K);
    for (int k = 0; k < ctx.K; ++k) {
        if (!(risk[k] > 0.0))
            throw Error("no at-risk mass at event time t_" + std::to_string(k + 1));
        lambda[k] = ctx.total_event_mass[k] / risk[k];
    }
    return lambda;
}

double profiled_loglik_impl(const CoxContext& ctx, const Eigen::VectorXd& beta) {
    Eigen::VectorXd risk;
    ctx.accumulate(beta, risk, nullptr, nullptr);
    double ll = -ctx.sum_d;
    for (int k = 0; k < ctx.K; ++k) {
        if (!(risk[k] > 0.0))
            throw Error("no at-risk mass at event time t_" + std::to_string(k + 1));
        ll += ctx.total_event_mass[k] * std::log(ctx.total_event_mass[k] / risk[k]);
    }
    for (int i = 0; i < ctx.data.n(); ++i)
        if (ctx.subject_mass[i] != 0.0)
            ll += ctx.subject_mass[i] * beta.dot(ctx.data.subjects[i].z2);
    return ll;
}

Eigen::VectorXd profiled_score_impl(const CoxContext& ctx, const Eigen::VectorXd& beta) {
    Eigen::VectorXd risk;
    Eigen::MatrixXd risk_z;
    ctx.accumulate(beta, risk, &risk_z, nullptr);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(ctx.data.dim_z2());
    for (int k = 0; k < ctx.K; ++k) {
        if (!(risk[k] > 0.0))
            throw Error("no at-risk mass at event time t_" + std::to_string(k + 1));
        g += ctx.event_mass_z.row(k).transpose() -
             ctx.total_event_mass[k] / risk[k] * risk_z.row(k).transpose();
    }
    return g;
}

Eigen::MatrixXd profiled_neg_hessian_impl(const CoxContext& ctx, const Eigen::VectorXd& beta) {
    Eigen::VectorXd risk;
    Eigen::MatrixXd risk_z;
    std::vector<Eigen::MatrixXd> risk_zz;
    ctx.accumulate(beta, risk, &risk_z, &risk_zz);
    const int d2 = ctx.data.dim_z2();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d2, d2);
    for (int k = 0; k < ctx.K; ++k) {
        const Eigen::VectorXd zbar = risk_z.row(k).transpose() / risk[k];
        h += ctx.total_event_mass[k] * (risk_zz[k] / risk[k] - zbar * zbar.transpose());
    }
    return h;
}

}  // namespace

Eigen::VectorXd profile_lambda(const Eigen::VectorXd& beta, const CoxWeights& weights,
                               const Dataset& data) {
    return profile_lambda_impl(CoxContext(weights, data), beta);
}

double weighted_cox_profiled_loglik(const Eigen::VectorXd& beta, const CoxWeights& weights,
                                    const Dataset& data) {
    return profiled_loglik_impl(CoxContext(weights, data), beta);
}

Eigen::VectorXd weighted_cox_profiled_score(const Eigen::VectorXd& beta, const CoxWeights& weights,
                                            const Dataset& data) {
    return profiled_score_impl(CoxContext(weights, data), beta);
}

CoxFit weighted_cox_fit(const CoxWeights& weights, const Dataset& data,
                        const Eigen::VectorXd& init_beta, const SolverConfig& cfg) {
    const CoxContext ctx(weights, data);
    const int d2 = data.dim_z2();
    CoxFit fit;
    fit.beta = init_beta.size() == d2 ? init_beta : Eigen::VectorXd::Zero(d2);
    if (d2 == 0) {
        // Covariate-free latency: nothing to maximize over beta.
        fit.lambda = profile_lambda_impl(ctx, fit.beta);
        fit.neg_hessian = Eigen::MatrixXd::Zero(0, 0);
        return fit;
    }

    double ll = profiled_loglik_impl(ctx, fit.beta);
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        const Eigen::VectorXd g = profiled_score_impl(ctx, fit.beta);
        const Eigen::MatrixXd h = profiled_neg_hessian_impl(ctx, fit.beta);
        if (g.lpNorm<Eigen::Infinity>() <= cfg.tol) {
            // Identifiability gate: a flat direction means the design cannot
            // pin beta down even though the score vanishes.
            auto ldlt = h.ldlt();
            if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() >
                                                   1e-12 * (1.0 + h.trace())).all())
                throw SingularHessianError("latency design is rank-deficient");
            fit.lambda = profile_lambda_impl(ctx, fit.beta);
            fit.neg_hessian = h;
            return fit;
        }

        Eigen::VectorXd step = solve_pd(h, g);
        double scale = 1.0;
        bool accepted = false;
        for (int half = 0; half <= cfg.step_halvings; ++half, scale *= 0.5) {
            const Eigen::VectorXd cand = fit.beta + scale * step;
            double cand_ll;
            try {
                cand_ll = profiled_loglik_impl(ctx, cand);
            } catch (const Error&) {
                continue;  // overshot into an overflow region; halve again
            }
            if (std::isfinite(cand_ll) && cand_ll >= ll - 1e-12 * (1.0 + std::abs(ll))) {
                fit.beta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw NonConcaveError("cox Newton step failed to ascend");
        if (fit.beta.lpNorm<Eigen::Infinity>() > kSeparationBox)
            throw SeparationError("cox coefficients diverged (monotone partial likelihood)");
    }
    throw MaxIterError("weighted cox fit exceeded max_iter");
}

CoxFit naive_cox_fit(const Dataset& data, const SolverConfig& cfg) {
    CoxWeights w;
    w.risk_from_entry = true;
    w.subjects.resize(data.subjects.size());
    for (int i = 0; i < data.n(); ++i) {
        const auto& s = data.subjects[i];
        auto& ws = w.subjects[i];
        if (s.status == Status::Event) ws.event_index = s.event_index;
        else ws.tail_mass = 1.0;  // cured treated as censored at tau
    }
    return weighted_cox_fit(w, data, Eigen::VectorXd::Zero(data.dim_z2()), cfg);
}

LogisticFit naive_logistic_fit(const Dataset& data, bool exclude_censored,
                               const SolverConfig& cfg) {
    const int n = data.n();
    Eigen::MatrixXd rows(n, data.dim_z1());
    LogisticWeights w{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    for (int i = 0; i < n; ++i) {
        const auto& s = data.subjects[i];
        rows.row(i) = s.z1.transpose();
        switch (s.status) {
            case Status::Event: w.w1[i] = 1.0; break;
            case Status::Cured: w.w0[i] = 1.0; break;
            case Status::Censored:
                if (!exclude_censored) w.w0[i] = 1.0;
                break;
        }
    }
    LogisticFit fit;
    fit.alpha = weighted_logistic_fit(rows, w, Eigen::VectorXd::Zero(data.dim_z1()), cfg);
    fit.neg_hessian = weighted_logistic_neg_hessian(rows, w, fit.alpha);
    return fit;
}

}  // namespace curefit
