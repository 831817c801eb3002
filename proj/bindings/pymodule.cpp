// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "curefit/simulate.hpp"
#include "curefit/survfit.hpp"
#include "curefit/variance.hpp"

namespace py = pybind11;
using namespace curefit;

namespace {

// Rows of z1 arrive without the intercept; it is prepended here.
Dataset make_dataset(const std::vector<double>& entry, const std::vector<double>& time,
                     const std::vector<std::string>& status, const Eigen::MatrixXd& z1,
                     const Eigen::MatrixXd& z2, double tau) {
    const auto n = entry.size();
    if (time.size() != n || status.size() != n || static_cast<size_t>(z1.rows()) != n ||
        static_cast<size_t>(z2.rows()) != n)
        throw DimensionError("entry, time, status and covariate rows must align");
    std::vector<SubjectRecord> records(n);
    for (size_t i = 0; i < n; ++i) {
        auto& r = records[i];
        r.id = "s" + std::to_string(i + 1);
        r.entry = entry[i];
        r.time = time[i];
        r.status = status_from_string(status[i]);
        r.z1.resize(z1.cols() + 1);
        r.z1[0] = 1.0;
        r.z1.tail(z1.cols()) = z1.row(static_cast<Eigen::Index>(i));
        r.z2 = z2.row(static_cast<Eigen::Index>(i));
        records[i] = std::move(r);
    }
    return build_dataset(std::move(records), tau);
}

py::dict fit_py(const std::vector<double>& entry, const std::vector<double>& time,
                const std::vector<std::string>& status, const Eigen::MatrixXd& z1,
                const Eigen::MatrixXd& z2, double tau, double param_tol, int max_iter) {
    const Dataset data = make_dataset(entry, time, status, z1, z2, tau);
    EMConfig cfg;
    cfg.param_tol = param_tol;
    cfg.max_iter = max_iter;
    const FitResult fit = fit_em(data, cfg);

    py::dict out;
    out["alpha"] = fit.params.alpha;
    out["beta"] = fit.params.beta;
    out["lambda"] = fit.params.lambda;
    out["event_times"] = data.event_times;
    out["se_alpha"] = fit.se_alpha;
    out["se_beta"] = fit.se_beta;
    out["covariance"] = fit.covariance;
    out["converged"] = fit.converged;
    out["iterations"] = fit.iterations;
    out["loglik_observed"] = fit.loglik_observed;
    out["loglik_tilde"] = fit.loglik_tilde;
    out["baseline_residual"] = fit.baseline_residual;
    return out;
}

py::dict gen_trial_py(int n, double trunc, double cens, std::uint64_t seed, int trial) {
    SimConfig cfg = SimConfig::table1_truth();
    cfg.n = n;
    cfg.trunc_target = trunc;
    cfg.cens_target = cens;
    cfg.master_seed = seed;
    if (trunc > 0.0) cfg.trunc_bound = calibrate_truncation_bound(cfg);
    if (cens > 0.0) cfg.cens_bound = calibrate_censoring_bound(cfg);
    const Dataset data = gen_trial(cfg, trial);

    const auto n_out = data.subjects.size();
    std::vector<double> entry(n_out), time(n_out), z1v(n_out), z2v(n_out);
    std::vector<std::string> status(n_out);
    for (size_t i = 0; i < n_out; ++i) {
        const auto& s = data.subjects[i];
        entry[i] = s.entry;
        time[i] = s.time;
        status[i] = to_string(s.status);
        z1v[i] = s.z1[1];
        z2v[i] = s.z1[2];
    }
    py::dict out;
    out["entry"] = entry;
    out["time"] = time;
    out["status"] = status;
    out["z1"] = z1v;
    out["z2"] = z2v;
    out["tau"] = data.tau;
    return out;
}

py::dict run_study_py(int n, double trunc, double cens, int trials, std::uint64_t seed,
                      int jobs) {
    SimConfig cfg = SimConfig::table1_truth();
    cfg.n = n;
    cfg.trunc_target = trunc;
    cfg.cens_target = cens;
    cfg.n_trials = trials;
    cfg.master_seed = seed;
    const StudySummary s = run_study(cfg, jobs);
    py::dict out;
    py::list params;
    for (const auto& p : s.params) {
        py::dict row;
        row["name"] = p.name;
        row["truth"] = p.truth;
        row["estimate_mean"] = p.estimate_mean;
        row["sample_sd"] = p.sample_sd;
        row["mean_se"] = p.mean_se;
        row["coverage"] = p.coverage_95;
        params.append(row);
    }
    out["params"] = params;
    out["trunc_bound"] = s.trunc_bound;
    out["cens_bound"] = s.cens_bound;
    out["n_trials"] = s.n_trials;
    out["n_converged"] = s.n_converged;
    out["n_nonconverged"] = s.n_nonconverged;
    out["n_failed"] = s.n_failed;
    return out;
}

py::dict km_py(const std::vector<double>& entry, const std::vector<double>& time,
               const std::vector<std::string>& status, double tau) {
    const auto n = entry.size();
    Eigen::MatrixXd z1(n, 0), z2(n, 0);
    const Dataset data = make_dataset(entry, time, status, z1, z2, tau);
    const KMCurve curve = km_left_truncated(data);
    std::vector<double> t, surv, se, lo, hi;
    std::vector<int> risk, events;
    for (const auto& pt : curve.points) {
        t.push_back(pt.time);
        risk.push_back(pt.n_risk);
        events.push_back(pt.n_event);
        surv.push_back(pt.survival);
        se.push_back(pt.std_err);
        lo.push_back(pt.ci_low);
        hi.push_back(pt.ci_high);
    }
    py::dict out;
    out["time"] = t;
    out["n_risk"] = risk;
    out["n_event"] = events;
    out["survival"] = surv;
    out["std_err"] = se;
    out["ci_low"] = lo;
    out["ci_high"] = hi;
    return out;
}

}  // namespace

PYBIND11_MODULE(_curefit, m) {
    m.doc() = "Cure-rate model NPMLE for left-truncated, right-censored data";

    // Translators run newest-first, so the base class goes in first and the
    // more specific mappings take precedence.
    py::register_exception<Error>(m, "CurefitError", PyExc_RuntimeError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<CalibrationError>(m, "CalibrationError", PyExc_ValueError);

    m.def("fit", &fit_py, py::arg("entry"), py::arg("time"), py::arg("status"), py::arg("z1"),
          py::arg("z2"), py::arg("tau"), py::arg("param_tol") = 1e-6, py::arg("max_iter") = 500,
          "EM fit of the cure model; z1 without the intercept column");
    m.def("gen_trial", &gen_trial_py, py::arg("n"), py::arg("trunc") = 0.0,
          py::arg("cens") = 0.0, py::arg("seed") = 1, py::arg("trial") = 1,
          "One simulated cohort from the benchmark design");
    m.def("run_study", &run_study_py, py::arg("n"), py::arg("trunc"), py::arg("cens"),
          py::arg("trials"), py::arg("seed") = 1, py::arg("jobs") = 1,
          "Monte Carlo study summary");
    m.def("km", &km_py, py::arg("entry"), py::arg("time"), py::arg("status"), py::arg("tau"),
          "Left-truncated Kaplan-Meier curve");
}
