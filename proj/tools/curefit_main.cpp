// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
//
// curefit: fit cure-rate models to left-truncated survival data, reproduce
// the simulation study, and emit plot-ready survival curves.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "curefit/io.hpp"
#include "curefit/simulate.hpp"
#include "curefit/survfit.hpp"
#include "curefit/variance.hpp"

namespace fs = std::filesystem;
using namespace curefit;

namespace {

struct CommonOpts {
    std::string out = ".";
    std::optional<long long> seed;
    std::string command_line;
};

std::optional<long long> env_seed() {
    if (const char* s = std::getenv("CUREFIT_SEED")) return std::atoll(s);
    return std::nullopt;
}

// "-" routes the primary artifact to stdout; everything else goes to files
// under the output directory.
class OutputSink {
   public:
    OutputSink(const std::string& out, const std::string& name, bool primary) {
        if (out == "-" && primary) {
            os_ = &std::cout;
            return;
        }
        const fs::path dir = out == "-" ? fs::path(".") : fs::path(out);
        fs::create_directories(dir);
        path_ = (dir / name).string();
        file_.open(path_);
        if (!file_) throw Error("cannot write '" + path_ + "'");
        os_ = &file_;
    }
    std::ostream& stream() { return *os_; }
    ~OutputSink() {
        if (file_.is_open()) {
            file_.close();
            std::cerr << "wrote " << path_ << '\n';
        }
    }

   private:
    std::ofstream file_;
    std::string path_;
    std::ostream* os_ = nullptr;
};

double as_fraction(double x) { return x > 1.0 ? x / 100.0 : x; }

struct CoefTable {
    std::vector<std::string> names;
    Eigen::VectorXd est;
    Eigen::VectorXd se;
};

void write_coef_array(JsonWriter& w, const std::string& key, const CoefTable& t) {
    w.begin_array(key);
    for (size_t j = 0; j < t.names.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        w.begin_array_item_object();
        w.field("name", t.names[j]);
        w.field("estimate", t.est[i]);
        w.field("se", t.se[i]);
        const double z2 = t.est[i] / t.se[i] * (t.est[i] / t.se[i]);
        w.field("p", chisq_pvalue(z2, 1));
        w.end_object();
    }
    w.end_array();
}

std::vector<std::string> with_intercept(const std::vector<std::string>& names) {
    std::vector<std::string> out{"(intercept)"};
    out.insert(out.end(), names.begin(), names.end());
    return out;
}

// Covariates present in both model parts get the paper-style joint 2-df test
// of (alpha_j, beta_j).
void write_joint_wald(JsonWriter& w, const FitResult& fit, const std::vector<std::string>& z1,
                      const std::vector<std::string>& z2) {
    w.begin_array("joint_wald");
    const int d1 = static_cast<int>(fit.params.alpha.size());
    for (size_t j = 0; j < z1.size(); ++j) {
        const auto it = std::find(z2.begin(), z2.end(), z1[j]);
        if (it == z2.end()) continue;
        const int bj = static_cast<int>(it - z2.begin());
        const WaldTest t = wald_test(fit, {static_cast<int>(j) + 1, d1 + bj});
        w.begin_array_item_object();
        w.field("name", z1[j]);
        w.field("statistic", t.statistic);
        w.field("df", t.df);
        w.field("p", t.p_value);
        w.end_object();
    }
    w.end_array();
}

void write_fit_json(std::ostream& os, const FitResult& fit, const LoadedData& ld,
                    const RunManifest& manifest) {
    JsonWriter w(os);
    w.begin_object();
    w.field("schema_version", 1);
    write_manifest(w, manifest);
    w.field("converged", fit.converged);
    w.field("iterations", fit.iterations);
    w.field("loglik_observed", fit.loglik_observed);
    w.field("loglik_tilde", fit.loglik_tilde);
    w.field("baseline_residual", fit.baseline_residual);
    w.field("stationarity_warning", fit.stationarity_warning);
    w.field("tau", ld.dataset.tau);
    write_coef_array(w, "logistic",
                     {with_intercept(ld.z1_names), fit.params.alpha, fit.se_alpha});
    write_coef_array(w, "cox", {ld.z2_names, fit.params.beta, fit.se_beta});
    write_joint_wald(w, fit, ld.z1_names, ld.z2_names);
    w.end_object();
}

EMConfig em_config_from(double param_tol, double loglik_tol, int max_iter) {
    EMConfig cfg;
    cfg.param_tol = param_tol;
    cfg.loglik_tol = loglik_tol;
    cfg.max_iter = max_iter;
    return cfg;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

int run_fit(const CommonOpts& common, const std::string& input, const ModelColumns& cols,
            std::optional<double> tau, const EMConfig& em) {
    const LoadedData ld = load_subjects_csv(input, cols, tau);
    const FitResult fit = fit_em(ld.dataset, em);

    RunManifest manifest;
    manifest.command = common.command_line;
    manifest.input_digest = file_digest(input);
    manifest.seed = common.seed;
    {
        OutputSink sink(common.out, "fit.json", true);
        write_fit_json(sink.stream(), fit, ld, manifest);
    }
    {
        OutputSink sink(common.out, "baseline.csv", false);
        write_baseline_csv(sink.stream(), ld.dataset, fit.params);
    }
    if (!fit.converged) {
        std::cerr << "EM did not converge within " << em.max_iter << " iterations\n";
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct Scenario {
    std::string label;
    SimConfig cfg;
    StudySummary summary;
};

void write_study_csv(std::ostream& os, const std::vector<Scenario>& scenarios) {
    os << "scenario,param,truth,estimate_mean,sample_sd,mean_se,coverage,n_trials,n_failed\n";
    for (const auto& sc : scenarios)
        for (const auto& p : sc.summary.params)
            os << sc.label << ',' << p.name << ',' << format17(p.truth) << ','
               << format17(p.estimate_mean) << ',' << format17(p.sample_sd) << ','
               << format17(p.mean_se) << ',' << format17(p.coverage_95) << ','
               << sc.summary.n_trials << ','
               << (sc.summary.n_failed + sc.summary.n_nonconverged) << '\n';
}

void write_study_json(std::ostream& os, const std::vector<Scenario>& scenarios,
                      const RunManifest& manifest) {
    JsonWriter w(os);
    w.begin_object();
    w.field("schema_version", 1);
    write_manifest(w, manifest);
    w.begin_array("scenarios");
    for (const auto& sc : scenarios) {
        w.begin_array_item_object();
        w.field("label", sc.label);
        w.field("n", sc.cfg.n);
        w.field("trunc_target", sc.cfg.trunc_target);
        w.field("cens_target", sc.cfg.cens_target);
        w.field("trunc_bound", sc.summary.trunc_bound);
        w.field("cens_bound", sc.summary.cens_bound);
        w.field("n_trials", sc.summary.n_trials);
        w.field("n_converged", sc.summary.n_converged);
        w.field("n_nonconverged", sc.summary.n_nonconverged);
        w.field("n_failed", sc.summary.n_failed);
        w.begin_array("params");
        for (const auto& p : sc.summary.params) {
            w.begin_array_item_object();
            w.field("name", p.name);
            w.field("truth", p.truth);
            w.field("estimate_mean", p.estimate_mean);
            w.field("sample_sd", p.sample_sd);
            w.field("mean_se", p.mean_se);
            w.field("coverage", p.coverage_95);
            w.end_object();
        }
        w.end_array();
        w.end_object();
    }
    w.end_array();
    w.end_object();
}

std::string scenario_label(const SimConfig& cfg) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "n=%d trunc=%g%% cens=%g%%", cfg.n,
                  100.0 * cfg.trunc_target, 100.0 * cfg.cens_target);
    return buf;
}

int run_simulate(const CommonOpts& common, SimConfig base, bool table1, int jobs,
                 bool emit_data) {
    std::vector<Scenario> scenarios;
    if (table1) {
        for (int n : {200, 1000})
            for (double tr : {0.10, 0.20})
                for (double ce : {0.0, 0.20}) {
                    SimConfig cfg = base;
                    cfg.n = n;
                    cfg.trunc_target = tr;
                    cfg.cens_target = ce;
                    scenarios.push_back({scenario_label(cfg), cfg, {}});
                }
        if (emit_data) throw Error("--emit-data needs a single scenario, not --table1");
    } else {
        scenarios.push_back({scenario_label(base), base, {}});
    }

    for (auto& sc : scenarios) {
        // Resolve bounds up front so emitted datasets and the study share them.
        if (sc.cfg.trunc_target > 0.0 && !sc.cfg.trunc_bound)
            sc.cfg.trunc_bound = calibrate_truncation_bound(sc.cfg);
        if (sc.cfg.cens_target > 0.0 && !sc.cfg.cens_bound)
            sc.cfg.cens_bound = calibrate_censoring_bound(sc.cfg);
        std::cerr << "scenario " << sc.label << ": a=" << sc.cfg.trunc_bound.value_or(0.0)
                  << " b=" << sc.cfg.cens_bound.value_or(0.0) << '\n';
        sc.summary = run_study(sc.cfg, jobs);
        if (emit_data) {
            for (int j = 1; j <= sc.cfg.n_trials; ++j) {
                const Dataset data = gen_trial(sc.cfg, j);
                OutputSink sink(common.out, "trial_" + std::to_string(j) + ".csv", false);
                write_dataset_csv(sink.stream(), data, {"z1", "z2"});
            }
        }
    }

    RunManifest manifest;
    manifest.command = common.command_line;
    manifest.seed = common.seed;
    {
        OutputSink sink(common.out, "study.csv", false);
        write_study_csv(sink.stream(), scenarios);
    }
    {
        OutputSink sink(common.out, "study.json", true);
        write_study_json(sink.stream(), scenarios, manifest);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// km
// ---------------------------------------------------------------------------

int run_km(const CommonOpts& common, const std::string& input, const std::string& by,
           bool exclude_cured, std::optional<double> tau) {
    const LoadedData ld = load_subjects_csv(input, {}, tau);
    auto base = [exclude_cured](const SubjectRecord& s) {
        return !exclude_cured || s.status != Status::Cured;
    };

    if (by.empty()) {
        const KMCurve curve = km_left_truncated(ld.dataset, base);
        OutputSink sink(common.out, "km.csv", true);
        write_km_csv(sink.stream(), curve);
        return 0;
    }

    const auto it = ld.columns.find(by);
    if (it == ld.columns.end()) throw DataError("unknown grouping column '" + by + "'");
    std::set<double> levels(it->second.begin(), it->second.end());
    if (levels.size() > 20) throw DataError("grouping column '" + by + "' is not discrete");
    const auto& values = it->second;
    for (double level : levels) {
        // Subjects are matched to their column values by position.
        auto pred = [&](const SubjectRecord& s) {
            const auto idx = static_cast<size_t>(&s - ld.dataset.subjects.data());
            return base(s) && values[idx] == level;
        };
        const KMCurve curve = km_left_truncated(ld.dataset, pred);
        char name[128];
        std::snprintf(name, sizeof(name), "km_%s_%g.csv", by.c_str(), level);
        OutputSink sink(common.out, name, false);
        write_km_csv(sink.stream(), curve);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct NaiveCoef {
    double est, se, p;
};

NaiveCoef naive_coef(const Eigen::VectorXd& est, const Eigen::MatrixXd& neg_hessian, int j) {
    const Eigen::MatrixXd cov =
        neg_hessian.ldlt().solve(Eigen::MatrixXd::Identity(neg_hessian.rows(),
                                                           neg_hessian.cols()));
    const double se = std::sqrt(cov(j, j));
    const double z2 = est[j] / se * (est[j] / se);
    return {est[j], se, chisq_pvalue(z2, 1)};
}

int run_compare(const CommonOpts& common, const std::string& input, const ModelColumns& cols,
                std::optional<double> tau, const EMConfig& em) {
    const LoadedData ld = load_subjects_csv(input, cols, tau);
    const FitResult cure = fit_em(ld.dataset, em);
    // Naive incidence model: event yes/no with censored counted as no.
    const LogisticFit logit = naive_logistic_fit(ld.dataset, /*exclude_censored=*/false,
                                                 em.solver);
    const CoxFit cox = naive_cox_fit(ld.dataset, em.solver);

    RunManifest manifest;
    manifest.command = common.command_line;
    manifest.input_digest = file_digest(input);
    manifest.seed = common.seed;

    OutputSink csv_sink(common.out, "compare.csv", false);
    csv_sink.stream() << "part,name,model,estimate,se,p\n";
    OutputSink sink(common.out, "compare.json", true);
    JsonWriter w(sink.stream());
    w.begin_object();
    w.field("schema_version", 1);
    write_manifest(w, manifest);

    const auto z1_full = with_intercept(ld.z1_names);
    w.begin_array("logistic");
    for (size_t j = 0; j < z1_full.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        const double cse = cure.se_alpha[i];
        const double cz2 = cure.params.alpha[i] / cse * (cure.params.alpha[i] / cse);
        const NaiveCoef nv = naive_coef(logit.alpha, logit.neg_hessian, static_cast<int>(j));
        w.begin_array_item_object();
        w.field("name", z1_full[j]);
        w.begin_object("cure");
        w.field("estimate", cure.params.alpha[i]);
        w.field("se", cse);
        w.field("p", chisq_pvalue(cz2, 1));
        w.end_object();
        w.begin_object("naive");
        w.field("estimate", nv.est);
        w.field("se", nv.se);
        w.field("p", nv.p);
        w.end_object();
        w.end_object();
        csv_sink.stream() << "logistic," << z1_full[j] << ",cure,"
                          << format17(cure.params.alpha[i]) << ',' << format17(cse) << ','
                          << format17(chisq_pvalue(cz2, 1)) << '\n';
        csv_sink.stream() << "logistic," << z1_full[j] << ",naive," << format17(nv.est) << ','
                          << format17(nv.se) << ',' << format17(nv.p) << '\n';
    }
    w.end_array();

    w.begin_array("cox");
    for (size_t j = 0; j < ld.z2_names.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        const double cse = cure.se_beta[i];
        const double cz2 = cure.params.beta[i] / cse * (cure.params.beta[i] / cse);
        const NaiveCoef nv = naive_coef(cox.beta, cox.neg_hessian, static_cast<int>(j));
        w.begin_array_item_object();
        w.field("name", ld.z2_names[j]);
        w.begin_object("cure");
        w.field("estimate", cure.params.beta[i]);
        w.field("se", cse);
        w.field("p", chisq_pvalue(cz2, 1));
        w.end_object();
        w.begin_object("naive");
        w.field("estimate", nv.est);
        w.field("se", nv.se);
        w.field("p", nv.p);
        w.end_object();
        w.end_object();
        csv_sink.stream() << "cox," << ld.z2_names[j] << ",cure," << format17(cure.params.beta[i])
                          << ',' << format17(cse) << ',' << format17(chisq_pvalue(cz2, 1))
                          << '\n';
        csv_sink.stream() << "cox," << ld.z2_names[j] << ",naive," << format17(nv.est) << ','
                          << format17(nv.se) << ',' << format17(nv.p) << '\n';
    }
    w.end_array();
    w.end_object();
    return cure.converged ? 0 : 3;
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

Dataset dataset_with_columns(const LoadedData& ld, const std::vector<std::string>& cols) {
    std::vector<SubjectRecord> records;
    records.reserve(ld.dataset.subjects.size());
    for (size_t i = 0; i < ld.dataset.subjects.size(); ++i) {
        SubjectRecord rec = ld.dataset.subjects[i];
        rec.z1.resize(static_cast<Eigen::Index>(cols.size()) + 1);
        rec.z1[0] = 1.0;
        rec.z2.resize(static_cast<Eigen::Index>(cols.size()));
        for (size_t j = 0; j < cols.size(); ++j) {
            const double v = ld.columns.at(cols[j])[i];
            rec.z1[static_cast<Eigen::Index>(j) + 1] = v;
            rec.z2[static_cast<Eigen::Index>(j)] = v;
        }
        records.push_back(std::move(rec));
    }
    return build_dataset(std::move(records), ld.dataset.tau);
}

// Joint 2-df p-value of covariate `name` in a cure model with columns `cols`
// in both parts.
WaldTest select_wald(const LoadedData& ld, const std::vector<std::string>& cols,
                     const std::string& name, const EMConfig& em) {
    const Dataset data = dataset_with_columns(ld, cols);
    const FitResult fit = fit_em(data, em);
    const int j = static_cast<int>(std::find(cols.begin(), cols.end(), name) - cols.begin());
    const int d1 = static_cast<int>(cols.size()) + 1;
    return wald_test(fit, {j + 1, d1 + j});
}

int run_select(const CommonOpts& common, const std::string& input, double screen_p,
               double keep_p, const std::vector<std::string>& force,
               std::optional<double> tau, const EMConfig& em) {
    const LoadedData ld = load_subjects_csv(input, {}, tau);
    for (const auto& f : force)
        if (ld.columns.find(f) == ld.columns.end())
            throw DataError("unknown forced column '" + f + "'");

    std::vector<std::string> candidates;
    for (const auto& name : ld.covariate_names)
        if (std::find(force.begin(), force.end(), name) == force.end())
            candidates.push_back(name);
    if (candidates.empty() && force.empty()) throw DataError("no candidate covariates");

    RunManifest manifest;
    manifest.command = common.command_line;
    manifest.input_digest = file_digest(input);
    manifest.seed = common.seed;

    OutputSink sink(common.out, "select.json", true);
    JsonWriter w(sink.stream());
    w.begin_object();
    w.field("schema_version", 1);
    write_manifest(w, manifest);
    w.field("screen_p", screen_p);
    w.field("keep_p", keep_p);

    // Univariate screen: each candidate alone (plus any forced columns).
    std::vector<std::string> survivors;
    w.begin_array("screen");
    for (const auto& name : candidates) {
        std::vector<std::string> cols = force;
        cols.push_back(name);
        const WaldTest t = select_wald(ld, cols, name, em);
        const bool kept = t.p_value <= screen_p;
        if (kept) survivors.push_back(name);
        w.begin_array_item_object();
        w.field("name", name);
        w.field("statistic", t.statistic);
        w.field("df", t.df);
        w.field("p", t.p_value);
        w.field("kept", kept);
        w.end_object();
    }
    w.end_array();

    // Backward elimination on the survivors; forced columns are never
    // dropped. Ties break toward the later column.
    std::vector<std::string> active = force;
    for (const auto& name : ld.covariate_names)
        if (std::find(survivors.begin(), survivors.end(), name) != survivors.end())
            active.push_back(name);
    w.begin_array("backward");
    int step = 0;
    for (;;) {
        std::vector<std::pair<std::string, WaldTest>> pvals;
        int drop = -1;
        double worst = keep_p;
        for (size_t j = 0; j < active.size(); ++j) {
            if (std::find(force.begin(), force.end(), active[j]) != force.end()) continue;
            const WaldTest t = select_wald(ld, active, active[j], em);
            pvals.emplace_back(active[j], t);
            if (t.p_value >= worst) {
                worst = t.p_value;
                drop = static_cast<int>(j);
            }
        }
        if (pvals.empty() || drop < 0 || worst <= keep_p) break;
        ++step;
        w.begin_array_item_object();
        w.field("step", step);
        w.begin_array("pvalues");
        for (const auto& [name, t] : pvals) {
            w.begin_array_item_object();
            w.field("name", name);
            w.field("p", t.p_value);
            w.end_object();
        }
        w.end_array();
        w.field("dropped", active[static_cast<size_t>(drop)]);
        w.end_object();
        active.erase(active.begin() + drop);
    }
    w.end_array();

    if (active.empty())
        std::cerr << "warning: every covariate was screened out; fitting the "
                     "intercept-only model\n";
    w.begin_array("selected");
    for (const auto& name : active) {
        w.begin_array_item_object();
        w.field("name", name);
        w.end_object();
    }
    w.end_array();

    const Dataset fin = dataset_with_columns(ld, active);
    const FitResult fit = fit_em(fin, em);
    w.field("converged", fit.converged);
    w.field("iterations", fit.iterations);
    w.field("loglik_observed", fit.loglik_observed);
    write_coef_array(w, "logistic", {with_intercept(active), fit.params.alpha, fit.se_alpha});
    write_coef_array(w, "cox", {active, fit.params.beta, fit.se_beta});
    w.end_object();
    return fit.converged ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cure-rate model NPMLE for left-truncated, right-censored data"};
    app.require_subcommand(1);

    CommonOpts common;
    // The manifest records the logical invocation: program basename, and no
    // --out so reruns into different directories stay byte-identical.
    common.command_line = "curefit";
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--out") {
            ++i;
            continue;
        }
        common.command_line += " " + std::string(argv[i]);
    }

    std::string input, by, truth_str;
    ModelColumns cols;
    std::vector<std::string> force;
    std::optional<double> tau;
    double param_tol = 1e-6, loglik_tol = 1e-8;
    int max_iter = 500;
    double trunc = 0.0, cens = 0.0;
    std::optional<double> trunc_bound, cens_bound;
    int n = 200, trials = 1, jobs = 1;
    bool table1 = false, emit_data = false, exclude_cured = false;
    double screen_p = 0.2, keep_p = 0.1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", common.out, "Output directory, or - for stdout");
        cmd->add_option("--seed", common.seed, "Random seed (fallback: CUREFIT_SEED)");
    };
    auto add_model = [&](CLI::App* cmd) {
        cmd->add_option("--z1", cols.z1, "Columns for the logistic part (default: all)")
            ->delimiter(',');
        cmd->add_option("--z2", cols.z2, "Columns for the Cox part (default: all)")
            ->delimiter(',');
        cmd->add_option("--tau", tau, "Cure horizon (default: largest cured time)");
        cmd->add_option("--param-tol", param_tol, "EM parameter tolerance");
        cmd->add_option("--loglik-tol", loglik_tol, "EM log-likelihood tolerance");
        cmd->add_option("--max-iter", max_iter, "EM iteration cap");
    };

    auto* fit = app.add_subcommand("fit", "Fit the cure model to a CSV cohort");
    fit->add_option("input", input, "Input CSV (id,entry,time,status,covariates...)")
        ->required();
    add_common(fit);
    add_model(fit);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo study of the estimator");
    add_common(sim);
    sim->add_option("--n", n, "Sample size per trial");
    sim->add_option("--trunc", trunc, "Truncation percentage or fraction");
    sim->add_option("--cens", cens, "Censoring percentage or fraction");
    sim->add_option("--trunc-bound", trunc_bound, "Explicit truncation bound a (skips calibration)");
    sim->add_option("--cens-bound", cens_bound, "Explicit censoring bound b (skips calibration)");
    sim->add_option("--trials", trials, "Number of trials");
    sim->add_option("--jobs", jobs, "Worker threads for trials");
    sim->add_option("--truth", truth_str, "True parameters a0,a1,a2,b1,b2");
    sim->add_flag("--table1", table1, "Run all eight benchmark scenarios");
    sim->add_flag("--emit-data", emit_data, "Also write each trial as trial_<j>.csv");
    sim->add_option("--param-tol", param_tol, "EM parameter tolerance");
    sim->add_option("--max-iter", max_iter, "EM iteration cap");

    auto* km = app.add_subcommand("km", "Left-truncated Kaplan-Meier curves");
    km->add_option("input", input, "Input CSV")->required();
    add_common(km);
    km->add_option("--by", by, "Discrete covariate column to stratify on");
    km->add_flag("--exclude-cured", exclude_cured, "Drop observed cured subjects first");
    km->add_option("--tau", tau, "Cure horizon (default: largest cured time)");

    auto* cmp = app.add_subcommand("compare", "Cure model vs naive logistic and naive Cox");
    cmp->add_option("input", input, "Input CSV")->required();
    add_common(cmp);
    add_model(cmp);

    auto* sel = app.add_subcommand("select", "Screen + backward covariate selection");
    sel->add_option("input", input, "Input CSV")->required();
    add_common(sel);
    sel->add_option("--screen-p", screen_p, "Univariate screen p-value cutoff");
    sel->add_option("--keep-p", keep_p, "Backward elimination p-value cutoff");
    sel->add_option("--force", force, "Columns kept in every model")->delimiter(',');
    sel->add_option("--tau", tau, "Cure horizon (default: largest cured time)");
    sel->add_option("--param-tol", param_tol, "EM parameter tolerance");
    sel->add_option("--max-iter", max_iter, "EM iteration cap");

    CLI11_PARSE(app, argc, argv);
    if (!common.seed) common.seed = env_seed();

    try {
        const EMConfig em = em_config_from(param_tol, loglik_tol, max_iter);
        if (fit->parsed()) return run_fit(common, input, cols, tau, em);
        if (sim->parsed()) {
            SimConfig cfg = SimConfig::table1_truth();
            if (!truth_str.empty()) {
                std::vector<double> v;
                std::stringstream ss(truth_str);
                std::string item;
                while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
                if (v.size() != 5) throw DataError("--truth needs a0,a1,a2,b1,b2");
                cfg.alpha_true << v[0], v[1], v[2];
                cfg.beta_true << v[3], v[4];
            }
            cfg.n = n;
            cfg.trunc_target = as_fraction(trunc);
            cfg.cens_target = as_fraction(cens);
            cfg.trunc_bound = trunc_bound;
            cfg.cens_bound = cens_bound;
            cfg.n_trials = trials;
            cfg.master_seed = static_cast<std::uint64_t>(common.seed.value_or(1));
            cfg.em = em;
            if (table1 && sim->count("--n") > 0)
                std::cerr << "note: --table1 fixes n to {200, 1000}; --n ignored\n";
            return run_simulate(common, cfg, table1, jobs, emit_data);
        }
        if (km->parsed()) return run_km(common, input, by, exclude_cured, tau);
        if (cmp->parsed()) return run_compare(common, input, cols, tau, em);
        if (sel->parsed()) return run_select(common, input, screen_p, keep_p, force, tau, em);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const CalibrationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 5;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
