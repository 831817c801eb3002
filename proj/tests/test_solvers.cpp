// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "curefit/model.hpp"
#include "curefit/rng.hpp"
#include "curefit/solvers.hpp"

using namespace curefit;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

SubjectRecord rec(const std::string& id, double q, double x, Status st, double z) {
    SubjectRecord r;
    r.id = id;
    r.entry = q;
    r.time = x;
    r.status = st;
    r.z1 = vec({1.0, z});
    r.z2 = vec({z});
    return r;
}

// Random small dataset: a mix of events, cured and censored subjects with
// optional left truncation.
Dataset random_dataset(Rng& rng, int n, bool truncation) {
    std::vector<SubjectRecord> recs;
    for (int i = 0; i < n; ++i) {
        const double z = rng.uniform(-1.0, 1.0);
        const double q = truncation && rng.uniform01() < 0.4 ? rng.uniform(0.0, 3.0) : 0.0;
        const double u = rng.uniform01();
        SubjectRecord r;
        if (u < 0.5) {
            r = rec("s" + std::to_string(i), q, q + rng.uniform(0.05, 9.8 - q), Status::Event, z);
        } else if (u < 0.75) {
            r = rec("s" + std::to_string(i), q, 10.0, Status::Cured, z);
        } else {
            r = rec("s" + std::to_string(i), q, q + rng.uniform(0.05, 9.9 - q), Status::Censored,
                    z);
        }
        recs.push_back(r);
    }
    // guarantee at least one event
    recs.push_back(rec("anchor", 0.0, 4.321, Status::Event, 0.3));
    return build_dataset(std::move(recs), 10.0);
}

CoxWeights random_em_style_weights(Rng& rng, const Dataset& data) {
    CoxWeights w;
    w.subjects.resize(data.subjects.size());
    const StepHazard hz(data.event_times, Eigen::VectorXd::Ones(data.num_event_times()));
    for (int i = 0; i < data.n(); ++i) {
        const auto& s = data.subjects[i];
        auto& ws = w.subjects[i];
        if (s.status == Status::Event) ws.event_index = s.event_index;
        else if (rng.uniform01() < 0.7) ws.tail_mass = rng.uniform(0.0, 1.0);
        const int m = hz.count_below(s.entry);
        ws.ghost_mass.assign(m, 0.0);
        for (int k = 0; k < m; ++k) ws.ghost_mass[k] = rng.uniform(0.0, 0.3);
    }
    return w;
}

// Direct evaluation of the unprofiled objective
//   l(beta, lambda) = sum_{i,k} w^f_{i,k} {log lambda_k + beta.z2_i}
//                     - sum_i e^{beta.z2_i} sum_k lambda_k a_i(t_k),
// with a_i per the risk convention; written against the dense accessor so it
// exercises none of the solver's suffix machinery.
double direct_cox_obj(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda,
                      const CoxWeights& w, const Dataset& data) {
    double ll = 0.0;
    const int K = data.num_event_times();
    for (int i = 0; i < data.n(); ++i) {
        const auto& s = data.subjects[i];
        const double r = std::exp(beta.dot(s.z2));
        for (int k = 0; k < K; ++k) {
            const double wf = w.event_mass_at(i, k);
            if (wf > 0.0) ll += wf * (std::log(lambda[k]) + beta.dot(s.z2));
            double a = 0.0;
            for (int h = k; h < K; ++h) a += w.event_mass_at(i, h);
            if (w.subjects[i].tail_mass > 0.0 && data.event_times[k] <= s.time)
                a += w.subjects[i].tail_mass;
            if (w.risk_from_entry && data.event_times[k] <= s.entry) a = 0.0;
            ll -= r * lambda[k] * a;
        }
    }
    return ll;
}

// Golden-section maximization of a 1-d concave function.
template <typename F>
double golden_max(F f, double lo, double hi, int iters = 120) {
    const double phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < iters; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("weighted logistic: intercept-only closed form") {
    Eigen::MatrixXd rows(4, 1);
    rows.setOnes();
    LogisticWeights w{vec({1.0, 0.0, 0.0, 0.0}), vec({0.0, 1.0, 1.0, 1.0})};
    const Eigen::VectorXd a = weighted_logistic_fit(rows, w, vec({0.0}), {});
    CHECK(a[0] == doctest::Approx(std::log(3.0)).epsilon(1e-10));

    // swapping the outcome masses flips the sign
    LogisticWeights ws{w.w1, w.w0};
    const Eigen::VectorXd b = weighted_logistic_fit(rows, ws, vec({0.0}), {});
    CHECK(b[0] == doctest::Approx(-a[0]).epsilon(1e-10));
}

TEST_CASE("weighted logistic: separation detected") {
    Eigen::MatrixXd rows(4, 2);
    rows << 1, 1, 1, 1, 1, -1, 1, -1;
    LogisticWeights w{vec({0.0, 0.0, 1.0, 1.0}), vec({1.0, 1.0, 0.0, 0.0})};
    CHECK_THROWS_AS(weighted_logistic_fit(rows, w, vec({0.0, 0.0}), {}), SeparationError);

    // one-class data is rejected up front
    LogisticWeights w1{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4)};
    CHECK_THROWS_AS(weighted_logistic_fit(rows, w1, vec({0.0, 0.0}), {}), SeparationError);
}

TEST_CASE("weighted logistic: unit weights match an independent IRLS") {
    Rng rng(17, 2);
    Eigen::MatrixXd rows(40, 2);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
        rows(i, 0) = 1.0;
        rows(i, 1) = rng.uniform(-2.0, 2.0);
        y[i] = rng.uniform01() < 1.0 / (1.0 + std::exp(-(0.3 + 0.8 * rows(i, 1)))) ? 1.0 : 0.0;
    }
    LogisticWeights w{(1.0 - y.array()).matrix(), y};
    const Eigen::VectorXd fit = weighted_logistic_fit(rows, w, vec({1.0, -1.0}), {});

    // textbook IRLS, started elsewhere
    Eigen::VectorXd alpha = vec({0.0, 0.0});
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd p(40), wt(40);
        for (int i = 0; i < 40; ++i) {
            const double eta = rows.row(i).dot(alpha);
            p[i] = 1.0 / (1.0 + std::exp(-eta));
            wt[i] = p[i] * (1.0 - p[i]);
        }
        const Eigen::MatrixXd xtw = rows.transpose() * wt.asDiagonal();
        alpha += (xtw * rows).ldlt().solve(rows.transpose() * (y - p));
    }
    CHECK((fit - alpha).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("weighted logistic: analytic score matches central differences") {
    Rng rng(29, 4);
    for (int inst = 0; inst < 3; ++inst) {
        const int n = 25;
        Eigen::MatrixXd rows(n, 2);
        LogisticWeights w{Eigen::VectorXd(n), Eigen::VectorXd(n)};
        for (int i = 0; i < n; ++i) {
            rows(i, 0) = 1.0;
            rows(i, 1) = rng.uniform(-2.0, 2.0);
            w.w0[i] = rng.uniform(0.0, 2.0);
            w.w1[i] = rng.uniform(0.0, 2.0);
        }
        for (int pt = 0; pt < 20; ++pt) {
            const Eigen::VectorXd a = vec({rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)});
            const Eigen::VectorXd g = weighted_logistic_score(rows, w, a);
            for (int j = 0; j < 2; ++j) {
                Eigen::VectorXd hi = a, lo = a;
                hi[j] += 1e-6;
                lo[j] -= 1e-6;
                const double fd = (weighted_logistic_loglik(rows, w, hi) -
                                   weighted_logistic_loglik(rows, w, lo)) /
                                  2e-6;
                CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("profile_lambda: hand Breslow on four subjects") {
    std::vector<SubjectRecord> recs{rec("a", 0, 1.0, Status::Event, 0.0),
                                    rec("b", 0, 2.0, Status::Event, 0.0),
                                    rec("c", 0, 2.0, Status::Event, 0.0),
                                    rec("d", 0, 3.0, Status::Event, 0.0)};
    Dataset d = build_dataset(std::move(recs), 20.0);
    CoxWeights w;
    w.subjects.resize(4);
    for (int i = 0; i < 4; ++i) w.subjects[i].event_index = d.subjects[i].event_index;
    const Eigen::VectorXd lam = profile_lambda(vec({0.0}), w, d);
    CHECK(lam[0] == doctest::Approx(1.0 / 4.0));
    CHECK(lam[1] == doctest::Approx(2.0 / 3.0));
    CHECK(lam[2] == doctest::Approx(1.0 / 1.0));

    // doubling all weights leaves the ratio unchanged
    CoxWeights w2 = w;  // event masses are fixed at 1; scale via ghosts+tails instead
    for (auto& s : w2.subjects) s.tail_mass = 0.0;
    const Eigen::VectorXd lam2 = profile_lambda(vec({0.0}), w2, d);
    CHECK((lam - lam2).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("profile_lambda: single subject, single event") {
    Dataset d = build_dataset({rec("only", 0, 1.0, Status::Event, 0.5)}, 20.0);
    CoxWeights w;
    w.subjects.resize(1);
    w.subjects[0].event_index = 0;
    const Eigen::VectorXd lam = profile_lambda(vec({0.0}), w, d);
    CHECK(lam[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("profile_lambda: plugged back, the lambda score vanishes exactly") {
    Rng rng(37, 6);
    for (int inst = 0; inst < 5; ++inst) {
        Dataset d = random_dataset(rng, 25, true);
        CoxWeights w = random_em_style_weights(rng, d);
        const Eigen::VectorXd beta = vec({rng.uniform(-0.8, 0.8)});
        const Eigen::VectorXd lam = profile_lambda(beta, w, d);
        // dl/dlambda_k = D_k / lambda_k - R_k vanishes at the closed form;
        // rebuild both sides densely, independent of the suffix machinery
        const int K = d.num_event_times();
        for (int k = 0; k < K; ++k) {
            double d_k = 0.0, r_k = 0.0;
            for (int i = 0; i < d.n(); ++i) {
                d_k += w.event_mass_at(i, k);
                double a = 0.0;
                for (int h = k; h < K; ++h) a += w.event_mass_at(i, h);
                if (d.event_times[static_cast<size_t>(k)] <= d.subjects[i].time)
                    a += w.subjects[i].tail_mass;
                r_k += std::exp(beta.dot(d.subjects[i].z2)) * a;
            }
            CHECK(lam[k] == doctest::Approx(d_k / r_k).epsilon(1e-12));
            CHECK(std::abs(d_k / lam[k] - r_k) * lam[k] <= 1e-10 * (1.0 + d_k));
        }
    }
}

TEST_CASE("weighted cox: profiled score matches central differences") {
    Rng rng(43, 8);
    for (int inst = 0; inst < 3; ++inst) {
        Dataset d = random_dataset(rng, 30, true);
        CoxWeights w = random_em_style_weights(rng, d);
        for (int pt = 0; pt < 20; ++pt) {
            const Eigen::VectorXd b = vec({rng.uniform(-1.0, 1.0)});
            const Eigen::VectorXd g = weighted_cox_profiled_score(b, w, d);
            Eigen::VectorXd hi = b, lo = b;
            hi[0] += 1e-6;
            lo[0] -= 1e-6;
            const double fd = (weighted_cox_profiled_loglik(hi, w, d) -
                               weighted_cox_profiled_loglik(lo, w, d)) /
                              2e-6;
            CHECK(g[0] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("weighted cox: unit weights match a brute-force joint maximizer") {
    // n = 6, K = 3, one binary covariate; the direct objective is maximized
    // by alternating golden-section sweeps, never touching the solver path.
    std::vector<SubjectRecord> recs{
        rec("a", 0, 1.0, Status::Event, 1.0),  rec("b", 0, 2.0, Status::Event, 0.0),
        rec("c", 0, 3.0, Status::Event, 1.0),  rec("d", 0, 3.5, Status::Censored, 0.0),
        rec("e", 0, 2.5, Status::Censored, 1.0), rec("f", 0, 10.0, Status::Cured, 0.0)};
    Dataset d = build_dataset(std::move(recs), 10.0);
    CoxWeights w;
    w.subjects.resize(6);
    for (int i = 0; i < 6; ++i) {
        if (d.subjects[i].status == Status::Event) w.subjects[i].event_index =
            d.subjects[i].event_index;
        else w.subjects[i].tail_mass = 1.0;
    }

    const CoxFit fit = weighted_cox_fit(w, d, vec({0.0}), {});
    CHECK(weighted_cox_profiled_score(fit.beta, w, d).lpNorm<Eigen::Infinity>() <= 1e-8);

    Eigen::VectorXd lam = vec({0.3, 0.3, 0.3});
    double beta = 0.0;
    for (int sweep = 0; sweep < 60; ++sweep) {
        for (int k = 0; k < 3; ++k)
            lam[k] = golden_max(
                [&](double x) {
                    Eigen::VectorXd l2 = lam;
                    l2[k] = x;
                    return direct_cox_obj(vec({beta}), l2, w, d);
                },
                1e-6, 5.0);
        beta = golden_max(
            [&](double x) { return direct_cox_obj(vec({x}), lam, w, d); }, -4.0, 4.0);
    }
    CHECK(fit.beta[0] == doctest::Approx(beta).epsilon(1e-6));
    for (int k = 0; k < 3; ++k) CHECK(fit.lambda[k] == doctest::Approx(lam[k]).epsilon(1e-5));
}

TEST_CASE("weighted cox: rank-deficient design is reported") {
    std::vector<SubjectRecord> recs{rec("a", 0, 1.0, Status::Event, 0.7),
                                    rec("b", 0, 2.0, Status::Event, 0.7),
                                    rec("c", 0, 3.0, Status::Censored, 0.7)};
    Dataset d = build_dataset(std::move(recs), 10.0);
    CoxWeights w;
    w.subjects.resize(3);
    w.subjects[0].event_index = 0;
    w.subjects[1].event_index = 1;
    w.subjects[2].tail_mass = 1.0;
    CHECK_THROWS_AS(weighted_cox_fit(w, d, vec({0.0}), {}), SingularHessianError);
}

TEST_CASE("weighted cox: ascent from the start and stationarity at the end") {
    Rng rng(53, 12);
    for (int inst = 0; inst < 5; ++inst) {
        Dataset d = random_dataset(rng, 30, true);
        CoxWeights w = random_em_style_weights(rng, d);
        const Eigen::VectorXd init = vec({rng.uniform(-1.0, 1.0)});
        const CoxFit fit = weighted_cox_fit(w, d, init, {});
        CHECK(weighted_cox_profiled_loglik(fit.beta, w, d) >=
              weighted_cox_profiled_loglik(init, w, d) - 1e-10);
        CHECK(weighted_cox_profiled_score(fit.beta, w, d).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
}

TEST_CASE("naive cox: reductions and the truncated risk set") {
    // no cured, no censored, Q = 0: equals the unit-weight classical fit
    Rng rng(61, 14);
    std::vector<SubjectRecord> recs;
    for (int i = 0; i < 12; ++i)
        recs.push_back(rec("s" + std::to_string(i), 0.0, 0.2 + 0.37 * i, Status::Event,
                           rng.uniform(-1.0, 1.0)));
    Dataset d = build_dataset(std::move(recs), 20.0);
    const CoxFit naive = naive_cox_fit(d, {});
    CoxWeights w;
    w.subjects.resize(12);
    for (int i = 0; i < 12; ++i) w.subjects[i].event_index = d.subjects[i].event_index;
    const CoxFit manual = weighted_cox_fit(w, d, vec({0.0}), {});
    CHECK((naive.beta - manual.beta).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((naive.lambda - manual.lambda).lpNorm<Eigen::Infinity>() < 1e-12);

    // five subjects, one late entry: the risk set at t_1 = 1 excludes the
    // subject with Q = 1.5 > t_1, so lambda_1 = 1/2 at beta = 0
    std::vector<SubjectRecord> tr{rec("a", 0.0, 1.0, Status::Event, 0.0),
                                  rec("b", 1.5, 2.0, Status::Event, 0.0),
                                  rec("c", 1.5, 3.0, Status::Event, 0.0),
                                  rec("d", 0.0, 0.5, Status::Censored, 0.0),
                                  rec("e", 0.0, 1.0, Status::Censored, 0.0)};
    Dataset dt = build_dataset(std::move(tr), 20.0);
    CoxWeights wt;
    wt.risk_from_entry = true;
    wt.subjects.resize(5);
    for (int i = 0; i < 5; ++i) {
        if (dt.subjects[i].status == Status::Event) wt.subjects[i].event_index =
            dt.subjects[i].event_index;
        else wt.subjects[i].tail_mass = 1.0;
    }
    const Eigen::VectorXd lam = profile_lambda(vec({0.0}), wt, dt);
    // at t_1=1: at risk are a (0,1] and e (0,1]; b,c enter later, d left at 0.5
    CHECK(lam[0] == doctest::Approx(0.5));
    // at t_2=2: b (1.5,2]; c (1.5,3]
    CHECK(lam[1] == doctest::Approx(0.5));
    CHECK(lam[2] == doctest::Approx(1.0));
}

TEST_CASE("naive logistic: contracts") {
    // all events: one class only
    std::vector<SubjectRecord> recs{rec("a", 0, 1.0, Status::Event, 0.5),
                                    rec("b", 0, 2.0, Status::Event, -0.5)};
    Dataset d = build_dataset(std::move(recs), 20.0);
    CHECK_THROWS_AS(naive_logistic_fit(d, true, {}), SeparationError);

    // two events, two cured, intercept-only symmetry
    std::vector<SubjectRecord> recs2{rec("a", 0, 1.0, Status::Event, 0.0),
                                     rec("b", 0, 2.0, Status::Event, 0.0),
                                     rec("c", 0, 20.0, Status::Cured, 0.0),
                                     rec("d", 0, 20.0, Status::Cured, 0.0)};
    for (auto& r : recs2) {
        r.z1 = vec({1.0});
        r.z2 = Eigen::VectorXd(0);
    }
    Dataset d2 = build_dataset(std::move(recs2), 20.0);
    CHECK(naive_logistic_fit(d2, true, {}).alpha[0] == doctest::Approx(0.0).epsilon(1e-12));

    // censored subjects count as non-events when not excluded
    std::vector<SubjectRecord> recs3{rec("a", 0, 1.0, Status::Event, 0.0),
                                     rec("b", 0, 2.0, Status::Censored, 0.0),
                                     rec("c", 0, 3.0, Status::Censored, 0.0)};
    for (auto& r : recs3) {
        r.z1 = vec({1.0});
        r.z2 = Eigen::VectorXd(0);
    }
    Dataset d3 = build_dataset(std::move(recs3), 20.0);
    CHECK(naive_logistic_fit(d3, false, {}).alpha[0] ==
          doctest::Approx(std::log(0.5)).epsilon(1e-6));
    CHECK_THROWS_AS(naive_logistic_fit(d3, true, {}), SeparationError);
}

TEST_CASE("solver iteration cap raises MaxIterError") {
    Rng rng(71, 20);
    Dataset d = random_dataset(rng, 40, false);
    SolverConfig cfg;
    cfg.max_iter = 1;
    cfg.tol = 1e-14;
    CHECK_THROWS_AS(naive_cox_fit(d, cfg), MaxIterError);
}
