// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#include "curefit/simulate.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "curefit/rng.hpp"

namespace curefit {

namespace {

// Calibration streams are fixed constants, distinct from every trial stream,
// so the resolved bounds are study-level metadata shared across seeds.
constexpr std::uint64_t kCalibrationSeed = 0xca11b0a7c0ffee01ULL;
constexpr int kCalibrationDraws = 200000;
constexpr double kCalibrationTol = 0.005;  // half a percentage point

struct Draw {
    double z1v = 0.0, z2v = 0.0;
    bool uncured = false;
    double t = 0.0;  // event time, or tau for the cured
};

Draw draw_subject(Rng& rng, const SimConfig& cfg) {
    Draw d;
    d.z1v = 4.0 + rng.normal();
    d.z2v = rng.bernoulli(0.3) ? 1.0 : 0.0;
    const double eta = cfg.alpha_true[0] + cfg.alpha_true[1] * d.z1v + cfg.alpha_true[2] * d.z2v;
    const double p = eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta))
                                : std::exp(eta) / (1.0 + std::exp(eta));
    d.uncured = rng.bernoulli(p);
    if (d.uncured) {
        const double u = rng.uniform01();
        const double shape = std::exp(-cfg.beta_true[0] * d.z1v - cfg.beta_true[1] * d.z2v);
        d.t = cfg.tau * (1.0 - std::pow(u, shape));
    } else {
        d.t = cfg.tau;
    }
    return d;
}

void check_design(const SimConfig& cfg) {
    if (cfg.alpha_true.size() != 3 || cfg.beta_true.size() != 2)
        throw DimensionError("simulation truth must be alpha (3) and beta (2)");
    if (cfg.tau != 20.0) throw Error("the simulation design fixes tau = 20");
}

}  // namespace

namespace {

double resolved_trunc_bound(const SimConfig& cfg) {
    if (cfg.trunc_bound) return *cfg.trunc_bound;
    if (cfg.trunc_target > 0.0)
        throw Error("truncation bound unresolved; calibrate or pass it explicitly");
    return 0.0;
}

}  // namespace

Dataset gen_trial(const SimConfig& cfg, int trial_index) {
    check_design(cfg);
    const double a = resolved_trunc_bound(cfg);
    const bool censoring = cfg.cens_bound.has_value() && *cfg.cens_bound > 0.0;
    if (!censoring && cfg.cens_target > 0.0)
        throw Error("censoring bound unresolved; calibrate or pass it explicitly");
    const double b = censoring ? *cfg.cens_bound : 0.0;
    if (a > 0.0 && !(a < 15.0)) throw Error("truncation bound must satisfy a < 15");
    if (censoring && !(b > 20.0)) throw Error("censoring bound must satisfy b > 20");

    Rng rng(cfg.master_seed, static_cast<std::uint64_t>(trial_index));
    std::vector<SubjectRecord> records;
    records.reserve(cfg.n);
    long attempts = 0;
    while (static_cast<int>(records.size()) < cfg.n) {
        ++attempts;
        if (attempts > 1000 && static_cast<double>(records.size()) < 0.01 * attempts)
            throw CalibrationError("simulation retention rate below 1%; bounds infeasible");
        const Draw d = draw_subject(rng, cfg);
        const double q = a > 0.0 ? rng.uniform(0.0, a) : 0.0;
        if (d.uncured && d.t <= q) continue;  // truncated out of the sample
        const double c =
            censoring ? rng.uniform(15.0, b) : std::numeric_limits<double>::infinity();

        SubjectRecord rec;
        rec.id = "s" + std::to_string(records.size() + 1);
        rec.entry = q;
        if (c < std::min(d.t, cfg.tau)) {
            rec.status = Status::Censored;
            rec.time = c;
        } else if (d.uncured) {
            rec.status = Status::Event;
            rec.time = d.t;
        } else {
            rec.status = Status::Cured;
            rec.time = cfg.tau;
        }
        rec.z1 = (Eigen::VectorXd(3) << 1.0, d.z1v, d.z2v).finished();
        rec.z2 = (Eigen::VectorXd(2) << d.z1v, d.z2v).finished();
        records.push_back(std::move(rec));
    }
    return build_dataset(std::move(records), cfg.tau);
}

double calibrate_truncation_bound(const SimConfig& cfg) {
    check_design(cfg);
    if (cfg.trunc_target < 0.0 || cfg.trunc_target > 0.5)
        throw CalibrationError("truncation target must lie in [0, 0.5]");
    if (cfg.trunc_target == 0.0) return 0.0;

    // Fixed pool of uncured draws; Q = a V makes the truncated fraction a
    // continuous increasing function of a on the same draws.
    Rng rng(kCalibrationSeed, 1);
    std::vector<double> t(kCalibrationDraws), v(kCalibrationDraws);
    for (int i = 0; i < kCalibrationDraws; ++i) {
        Draw d = draw_subject(rng, cfg);
        while (!d.uncured) d = draw_subject(rng, cfg);
        t[i] = d.t;
        v[i] = rng.uniform01();
    }
    auto frac = [&](double a) {
        long hit = 0;
        for (int i = 0; i < kCalibrationDraws; ++i)
            if (t[i] <= a * v[i]) ++hit;
        return static_cast<double>(hit) / kCalibrationDraws;
    };

    double lo = 0.01, hi = 14.99;
    if (frac(hi) < cfg.trunc_target - kCalibrationTol)
        throw CalibrationError("truncation target unreachable with a < 15");
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (frac(mid) < cfg.trunc_target ? lo : hi) = mid;
    }
    const double a = 0.5 * (lo + hi);
    if (std::abs(frac(a) - cfg.trunc_target) > kCalibrationTol)
        throw CalibrationError("truncation calibration did not reach the target");
    return a;
}

double calibrate_censoring_bound(const SimConfig& cfg) {
    check_design(cfg);
    if (cfg.cens_target < 0.0 || cfg.cens_target > 0.5)
        throw CalibrationError("censoring target must lie in [0, 0.5]");
    if (cfg.cens_target == 0.0) return 0.0;
    const double a = resolved_trunc_bound(cfg);

    // Retained-sample pool (truncation applied); C = 15 + (b-15) W makes the
    // censored fraction a continuous decreasing function of b.
    Rng rng(kCalibrationSeed, 2);
    std::vector<double> t(kCalibrationDraws), w(kCalibrationDraws);
    for (int i = 0; i < kCalibrationDraws; ++i) {
        for (;;) {
            const Draw d = draw_subject(rng, cfg);
            const double q = a > 0.0 ? rng.uniform(0.0, a) : 0.0;
            if (d.uncured && d.t <= q) continue;
            t[i] = std::min(d.t, cfg.tau);
            break;
        }
        w[i] = rng.uniform01();
    }
    auto frac = [&](double b) {
        long hit = 0;
        for (int i = 0; i < kCalibrationDraws; ++i)
            if (15.0 + (b - 15.0) * w[i] < t[i]) ++hit;
        return static_cast<double>(hit) / kCalibrationDraws;
    };

    double lo = 20.01, hi = 2000.0;
    if (frac(lo) < cfg.cens_target - kCalibrationTol)
        throw CalibrationError("censoring target unreachable; max achievable is " +
                               std::to_string(frac(lo)));
    if (frac(hi) > cfg.cens_target + kCalibrationTol)
        throw CalibrationError("censoring target below what b <= 2000 can produce");
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (frac(mid) > cfg.cens_target ? lo : hi) = mid;
    }
    const double b = 0.5 * (lo + hi);
    if (std::abs(frac(b) - cfg.cens_target) > kCalibrationTol)
        throw CalibrationError("censoring calibration did not reach the target");
    return b;
}

StudySummary run_study(const SimConfig& cfg, int n_jobs) {
    SimConfig resolved = cfg;
    if (cfg.trunc_target > 0.0 && !cfg.trunc_bound)
        resolved.trunc_bound = calibrate_truncation_bound(cfg);
    if (cfg.cens_target > 0.0 && !cfg.cens_bound)
        resolved.cens_bound = calibrate_censoring_bound(resolved);

    const char* names[5] = {"alpha0", "alpha1", "alpha2", "beta1", "beta2"};
    const double truths[5] = {cfg.alpha_true[0], cfg.alpha_true[1], cfg.alpha_true[2],
                              cfg.beta_true[0], cfg.beta_true[1]};
    constexpr double kZ = 1.959963984540054;

    enum class Outcome { Converged, NotConverged, Failed };
    struct TrialRow {
        Outcome outcome = Outcome::Failed;
        double est[5], se[5];
        bool cover[5];
    };
    std::vector<TrialRow> rows(static_cast<size_t>(cfg.n_trials));

    std::atomic<int> next{1};
    auto worker = [&]() {
        for (;;) {
            const int j = next.fetch_add(1);
            if (j > cfg.n_trials) return;
            TrialRow& row = rows[static_cast<size_t>(j - 1)];
            try {
                const Dataset data = gen_trial(resolved, j);
                const FitResult fit = fit_em(data, resolved.em);
                if (!fit.converged) {
                    row.outcome = Outcome::NotConverged;
                    continue;
                }
                for (int k = 0; k < 5; ++k) {
                    row.est[k] = k < 3 ? fit.params.alpha[k] : fit.params.beta[k - 3];
                    row.se[k] = k < 3 ? fit.se_alpha[k] : fit.se_beta[k - 3];
                    row.cover[k] = std::abs(row.est[k] - truths[k]) <= kZ * row.se[k];
                }
                row.outcome = Outcome::Converged;
            } catch (const Error&) {
                row.outcome = Outcome::Failed;
            }
        }
    };
    if (n_jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_jobs; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    StudySummary summary;
    summary.trunc_bound = resolved.trunc_bound.value_or(0.0);
    summary.cens_bound = resolved.cens_bound.value_or(0.0);
    summary.n_trials = cfg.n_trials;
    for (const auto& row : rows) {
        switch (row.outcome) {
            case Outcome::Converged: ++summary.n_converged; break;
            case Outcome::NotConverged: ++summary.n_nonconverged; break;
            case Outcome::Failed: ++summary.n_failed; break;
        }
    }
    const int m = summary.n_converged;
    for (int k = 0; k < 5; ++k) {
        StudySummary::ParamRow pr;
        pr.name = names[k];
        pr.truth = truths[k];
        double sum = 0.0, sum_se = 0.0;
        long covered = 0;
        for (const auto& row : rows)
            if (row.outcome == Outcome::Converged) {
                sum += row.est[k];
                sum_se += row.se[k];
                covered += row.cover[k] ? 1 : 0;
            }
        pr.estimate_mean = m > 0 ? sum / m : std::numeric_limits<double>::quiet_NaN();
        pr.mean_se = m > 0 ? sum_se / m : std::numeric_limits<double>::quiet_NaN();
        pr.coverage_95 =
            m > 0 ? static_cast<double>(covered) / m : std::numeric_limits<double>::quiet_NaN();
        double ss = 0.0;
        for (const auto& row : rows)
            if (row.outcome == Outcome::Converged)
                ss += (row.est[k] - pr.estimate_mean) * (row.est[k] - pr.estimate_mean);
        pr.sample_sd = m > 1 ? std::sqrt(ss / (m - 1)) : std::numeric_limits<double>::quiet_NaN();
        summary.params.push_back(std::move(pr));
    }
    return summary;
}

}  // namespace curefit
