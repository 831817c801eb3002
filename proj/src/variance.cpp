// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#include "curefit/variance.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

namespace curefit {

namespace {

// Per-subject quantities shared by the three conditional-expectation
// assemblers. The complete-data score is linear in the latent variables,
//   S_i = c0 + A_i cA + M_i cM + sum_j h(T~_ij),
// with A_i Bernoulli, M_i geometric and the ghost times iid given M_i; every
// moment below follows from that decomposition.
struct SubjectParts {
    double p, rel;            // cure probability, e^{beta.z2}
    double log_surv_x = 0.0;  // log S(X), never used for cured subjects
    bool event = false, cured = false, censored = false;
    int own_index = -1;   // event-time index of the subject's own event
    int risk_end = -1;    // largest k with t_k <= X
    int ghost_count = 0;  // event times strictly below the entry
    std::vector<double> ghost_tail;      // G_k = P(T~ >= t_k)
    std::vector<double> ghost_log_surv;  // log S(t_k) on the ghost support
    double ghost_lin = 0.0;   // sum_k g_k log S(t_k)
    double ghost_quad = 0.0;  // sum_k g_k log S(t_k)^2

    SubjectParts(const ModelParams& params, const Dataset& data, const StepHazard& hz,
                 const LatentSummaries& lat, int i) {
        const auto& s = data.subjects[i];
        p = cure_prob(params.alpha, s.z1);
        rel = std::exp(params.beta.dot(s.z2));
        event = s.status == Status::Event;
        cured = s.status == Status::Cured;
        censored = s.status == Status::Censored;
        own_index = s.event_index;
        if (!cured) {
            risk_end = hz.last_at_or_before(s.time);
            log_surv_x = -hz.cum(s.time) * rel;
        }
        ghost_count = static_cast<int>(lat.ghost_pmf.size());
        ghost_tail.resize(ghost_count);
        ghost_log_surv.resize(ghost_count);
        double tail = 0.0;
        for (int k = ghost_count - 1; k >= 0; --k) {
            tail += lat.ghost_pmf[k];
            ghost_tail[k] = tail;
            ghost_log_surv[k] = -hz.cum_at(k) * rel;
        }
        for (int k = 0; k < ghost_count; ++k) {
            ghost_lin += lat.ghost_pmf[k] * ghost_log_surv[k];
            ghost_quad += lat.ghost_pmf[k] * ghost_log_surv[k] * ghost_log_surv[k];
        }
    }
};

// Coefficient of A_i in the score (zero for cured subjects, whose A is
// deterministically 0 and whose Cox terms never enter).
Eigen::VectorXd coef_a(const SubjectParts& c, const ModelParams& params, const Dataset& data,
                       int i) {
    const auto& s = data.subjects[i];
    const int d1 = data.dim_z1(), d2 = data.dim_z2();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d1 + d2 + data.num_event_times());
    v.segment(0, d1) = s.z1;
    if (c.cured) return v;
    v.segment(d1, d2) = s.z2 * ((c.event ? 1.0 : 0.0) + c.log_surv_x);
    if (c.event) v[d1 + d2 + c.own_index] += 1.0 / params.lambda[c.own_index];
    for (int k = 0; k <= c.risk_end; ++k) v[d1 + d2 + k] -= c.rel;
    return v;
}

// Mean per-ghost score contribution hbar = sum_k g_k h(t_k).
Eigen::VectorXd ghost_mean(const SubjectParts& c, const ModelParams& params, const Dataset& data,
                           const LatentSummaries& lat, int i) {
    const auto& s = data.subjects[i];
    const int d1 = data.dim_z1(), d2 = data.dim_z2();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d1 + d2 + data.num_event_times());
    v.segment(d1, d2) = s.z2 * c.ghost_lin;
    for (int k = 0; k < c.ghost_count; ++k)
        v[d1 + d2 + k] = lat.ghost_pmf[k] / params.lambda[k] - c.ghost_tail[k] * c.rel;
    return v;
}

}  // namespace

Eigen::VectorXd complete_score_expectation(const ModelParams& params, const Dataset& data,
                                           const LatentSummaries& lat, int i) {
    const StepHazard hz(data.event_times, params.lambda);
    const SubjectParts c(params, data, hz, lat, i);
    const auto& s = data.subjects[i];
    const int d1 = data.dim_z1(), d2 = data.dim_z2();
    Eigen::VectorXd v = lat.e_a * coef_a(c, params, data, i) +
                        lat.e_m * ghost_mean(c, params, data, lat, i);
    // Alpha block assembles to z1 {e_a - p + e_m (1-p)}, beta block to
    // z2 [e_a {d1 + log S(X)} + e_m {1 + sum_k g_k log S(t_k)}]; coef_a and
    // ghost_mean already carry the e_a and per-ghost parts.
    v.segment(0, d1) += s.z1 * (lat.e_m * (1.0 - c.p) - c.p);
    v.segment(d1, d2) += s.z2 * lat.e_m;
    return v;
}

Eigen::MatrixXd complete_info_expectation(const ModelParams& params, const Dataset& data,
                                          const LatentSummaries& lat, int i) {
    const StepHazard hz(data.event_times, params.lambda);
    const SubjectParts c(params, data, hz, lat, i);
    const auto& s = data.subjects[i];
    const int d1 = data.dim_z1(), d2 = data.dim_z2(), K = data.num_event_times();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d1 + d2 + K, d1 + d2 + K);

    m.block(0, 0, d1, d1) = (1.0 + lat.e_m) * c.p * (1.0 - c.p) * (s.z1 * s.z1.transpose());

    double exposure = lat.e_m * c.ghost_lin;  // e_a log S(X) + e_m sum g log S
    if (!c.cured) exposure += lat.e_a * c.log_surv_x;
    m.block(d1, d1, d2, d2) = -exposure * (s.z2 * s.z2.transpose());

    for (int k = 0; k < K; ++k) {
        double at_risk = 0.0;  // e_a 1{t_k <= X} + e_m P(T~ >= t_k)
        if (!c.cured && k <= c.risk_end) at_risk += lat.e_a;
        if (k < c.ghost_count) at_risk += lat.e_m * c.ghost_tail[k];
        if (at_risk != 0.0) {
            m.block(d1, d1 + d2 + k, d2, 1) = at_risk * c.rel * s.z2;
            m.block(d1 + d2 + k, d1, 1, d2) = at_risk * c.rel * s.z2.transpose();
        }
        double mass = 0.0;  // e_a d1 1{X = t_k} + e_m g_k
        if (c.event && k == c.own_index) mass += lat.e_a;
        if (k < c.ghost_count) mass += lat.e_m * lat.ghost_pmf[k];
        m(d1 + d2 + k, d1 + d2 + k) = mass / (params.lambda[k] * params.lambda[k]);
    }
    return m;
}

Eigen::MatrixXd score_outer_expectation(const ModelParams& params, const Dataset& data,
                                        const LatentSummaries& lat, int i) {
    const StepHazard hz(data.event_times, params.lambda);
    const SubjectParts c(params, data, hz, lat, i);
    const auto& s = data.subjects[i];
    const int d1 = data.dim_z1(), d2 = data.dim_z2(), K = data.num_event_times();
    const int d = d1 + d2 + K;

    const Eigen::VectorXd ca = coef_a(c, params, data, i);
    const Eigen::VectorXd hbar = ghost_mean(c, params, data, lat, i);
    // Coefficient of M_i plus the mean per-ghost contribution.
    Eigen::VectorXd w = hbar;
    w.segment(0, d1) += s.z1 * (1.0 - c.p);
    w.segment(d1, d2) += s.z2;

    Eigen::MatrixXd cov = lat.var_a * (ca * ca.transpose()) + lat.var_m * (w * w.transpose());

    if (lat.e_m > 0.0) {
        // E[M] { sum_k g_k h(t_k) h(t_k)^T - hbar hbar^T }: the within-ghost
        // scatter. Only the beta block and the ghost-support lambda block of
        // h are nonzero.
        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
        scatter.block(d1, d1, d2, d2) = c.ghost_quad * (s.z2 * s.z2.transpose());
        double tail_ls = 0.0;  // suffix sums of g_k log S(t_k)
        std::vector<double> tls(c.ghost_count);
        for (int k = c.ghost_count - 1; k >= 0; --k) {
            tail_ls += lat.ghost_pmf[k] * c.ghost_log_surv[k];
            tls[k] = tail_ls;
        }
        for (int k = 0; k < c.ghost_count; ++k) {
            const double bl =
                lat.ghost_pmf[k] * c.ghost_log_surv[k] / params.lambda[k] - c.rel * tls[k];
            scatter.block(d1, d1 + d2 + k, d2, 1) = bl * s.z2;
            scatter.block(d1 + d2 + k, d1, 1, d2) = bl * s.z2.transpose();
        }
        for (int k = 0; k < c.ghost_count; ++k) {
            const int row = d1 + d2 + k;
            scatter(row, row) += lat.ghost_pmf[k] / (params.lambda[k] * params.lambda[k]) -
                                 2.0 * c.rel * lat.ghost_pmf[k] / params.lambda[k] +
                                 c.rel * c.rel * c.ghost_tail[k];
            // Off-diagonal (h < k): only the larger index can coincide with
            // the ghost time, so the cross term reduces to
            // -r g_k / lambda_k + r^2 G_k.
            for (int h = 0; h < k; ++h) {
                const double v = -c.rel * lat.ghost_pmf[k] / params.lambda[k] +
                                 c.rel * c.rel * c.ghost_tail[k];
                scatter(d1 + d2 + h, row) += v;
                scatter(row, d1 + d2 + h) += v;
            }
        }
        cov += lat.e_m * (scatter - hbar * hbar.transpose());
    }

    const Eigen::VectorXd mean = complete_score_expectation(params, data, lat, i);
    return cov + mean * mean.transpose();
}

InformationMatrix louis_information(const ModelParams& params, const Dataset& data) {
    const EMWeights weights = e_step(params, data);
    const int d1 = data.dim_z1(), d2 = data.dim_z2(), K = data.num_event_times();
    const int d = d1 + d2 + K;
    const StepHazard hz(data.event_times, params.lambda);

    // Accumulates sum_i { E[B_i] - Cov[S_i] } on the lower triangle; the
    // rank-one pieces of Cov go through rankUpdate, everything else through
    // targeted writes. Must agree with the per-subject reference
    // implementations above (checked in the tests).
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
    auto lower = acc.selfadjointView<Eigen::Lower>();
    Eigen::VectorXd total_score = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd mean(d);

    for (int i = 0; i < data.n(); ++i) {
        const auto& lat = weights.latents[i];
        const auto& s = data.subjects[i];
        const SubjectParts c(params, data, hz, lat, i);
        const Eigen::VectorXd ca = coef_a(c, params, data, i);
        const Eigen::VectorXd hbar = ghost_mean(c, params, data, lat, i);
        Eigen::VectorXd w = hbar;
        w.segment(0, d1) += s.z1 * (1.0 - c.p);
        w.segment(d1, d2) += s.z2;

        // expected score: c0 + e_a cA + e_m (cM + hbar)
        mean = lat.e_a * ca + lat.e_m * w;
        mean.segment(0, d1) -= c.p * s.z1;
        total_score += mean;

        // E[B_i]
        acc.block(0, 0, d1, d1).triangularView<Eigen::Lower>() +=
            ((1.0 + lat.e_m) * c.p * (1.0 - c.p)) * (s.z1 * s.z1.transpose());
        double exposure = lat.e_m * c.ghost_lin;
        if (!c.cured) exposure += lat.e_a * c.log_surv_x;
        acc.block(d1, d1, d2, d2).triangularView<Eigen::Lower>() -=
            exposure * (s.z2 * s.z2.transpose());
        const int reach = c.cured ? c.ghost_count : std::max(c.risk_end + 1, c.ghost_count);
        for (int k = 0; k < reach; ++k) {
            double at_risk = 0.0;
            if (!c.cured && k <= c.risk_end) at_risk += lat.e_a;
            if (k < c.ghost_count) at_risk += lat.e_m * c.ghost_tail[k];
            if (at_risk != 0.0)
                acc.block(d1 + d2 + k, d1, 1, d2) += (at_risk * c.rel) * s.z2.transpose();
            double mass = 0.0;
            if (c.event && k == c.own_index) mass += lat.e_a;
            if (k < c.ghost_count) mass += lat.e_m * lat.ghost_pmf[k];
            if (mass != 0.0)
                acc(d1 + d2 + k, d1 + d2 + k) += mass / (params.lambda[k] * params.lambda[k]);
        }

        // -Cov[S_i]: rank-one parts
        if (lat.var_a != 0.0) lower.rankUpdate(ca, -lat.var_a);
        if (lat.var_m != 0.0) lower.rankUpdate(w, -lat.var_m);
        if (lat.e_m != 0.0) {
            lower.rankUpdate(hbar, lat.e_m);
            // minus the within-ghost scatter e_m sum_k g_k h_k h_k^T
            acc.block(d1, d1, d2, d2).triangularView<Eigen::Lower>() -=
                (lat.e_m * c.ghost_quad) * (s.z2 * s.z2.transpose());
            double tail_ls = 0.0;
            std::vector<double> tls(static_cast<size_t>(c.ghost_count));
            for (int k = c.ghost_count - 1; k >= 0; --k) {
                tail_ls += lat.ghost_pmf[k] * c.ghost_log_surv[k];
                tls[static_cast<size_t>(k)] = tail_ls;
            }
            for (int k = 0; k < c.ghost_count; ++k) {
                const double bl = lat.ghost_pmf[k] * c.ghost_log_surv[k] / params.lambda[k] -
                                  c.rel * tls[static_cast<size_t>(k)];
                acc.block(d1 + d2 + k, d1, 1, d2) -= (lat.e_m * bl) * s.z2.transpose();
                const int row = d1 + d2 + k;
                acc(row, row) -=
                    lat.e_m * (lat.ghost_pmf[k] / (params.lambda[k] * params.lambda[k]) -
                               2.0 * c.rel * lat.ghost_pmf[k] / params.lambda[k] +
                               c.rel * c.rel * c.ghost_tail[k]);
                const double off = -c.rel * lat.ghost_pmf[k] / params.lambda[k] +
                                   c.rel * c.rel * c.ghost_tail[k];
                for (int h = 0; h < k; ++h) acc(row, d1 + d2 + h) -= lat.e_m * off;
            }
        }
    }

    InformationMatrix info;
    info.dim_alpha = d1;
    info.dim_beta = d2;
    info.matrix = acc.selfadjointView<Eigen::Lower>();
    info.score_supnorm = total_score.lpNorm<Eigen::Infinity>();
    return info;
}

CovarianceResult covariance_and_se(const InformationMatrix& info) {
    const Eigen::Index d = info.matrix.rows();
    if (info.matrix.cols() != d) throw DimensionError("information matrix not square");
    auto ldlt = info.matrix.ldlt();
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
        throw SingularInformationError("observed information is not positive definite");

    CovarianceResult res;
    res.covariance = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
    if (!res.covariance.allFinite())
        throw SingularInformationError("information inversion produced non-finite values");
    res.se_alpha.resize(info.dim_alpha);
    res.se_beta.resize(info.dim_beta);
    for (int j = 0; j < info.dim_alpha + info.dim_beta; ++j) {
        const double v = res.covariance(j, j);
        if (!(v > 0.0))
            throw SingularInformationError("nonpositive variance for coefficient " +
                                           std::to_string(j));
        if (j < info.dim_alpha) res.se_alpha[j] = std::sqrt(v);
        else res.se_beta[j - info.dim_alpha] = std::sqrt(v);
    }
    return res;
}

WaldTest wald_test(const FitResult& fit, const std::vector<int>& coord_indices) {
    const int d1 = static_cast<int>(fit.params.alpha.size());
    const int d2 = static_cast<int>(fit.params.beta.size());
    const int m = static_cast<int>(coord_indices.size());
    if (m == 0) throw Error("wald_test needs at least one coordinate");

    Eigen::VectorXd theta(m);
    Eigen::MatrixXd sub(m, m);
    for (int a = 0; a < m; ++a) {
        const int ja = coord_indices[a];
        if (ja < 0 || ja >= d1 + d2)
            throw DimensionError("wald_test index outside the (alpha, beta) blocks");
        theta[a] = ja < d1 ? fit.params.alpha[ja] : fit.params.beta[ja - d1];
        for (int b = 0; b < m; ++b) sub(a, b) = fit.covariance(ja, coord_indices[b]);
    }
    auto ldlt = sub.ldlt();
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
        throw SingularInformationError("singular covariance sub-block in wald_test");

    WaldTest t;
    t.df = m;
    t.statistic = theta.dot(ldlt.solve(theta));
    t.p_value = chisq_pvalue(t.statistic, t.df);
    return t;
}

double chisq_pvalue(double statistic, int df) {
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * statistic);
}

}  // namespace curefit
