// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "curefit/io.hpp"
#include "curefit/rng.hpp"
#include "curefit/simulate.hpp"

using namespace curefit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
    const char* p = std::getenv("CUREFIT_CLI");
    REQUIRE_MESSAGE(p != nullptr, "CUREFIT_CLI must point at the curefit binary");
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("curefit_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("format17 round-trips doubles exactly") {
    Rng rng(1, 1);
    for (int i = 0; i < 200; ++i) {
        double x = (rng.uniform01() - 0.5) * std::pow(10.0, rng.uniform(-12.0, 12.0));
        CHECK(std::stod(format17(x)) == x);
    }
    CHECK(format17(std::nan("")) == "NA");
}

TEST_CASE("csv loader: schema and row diagnostics") {
    const fs::path dir = scratch_dir("csv");
    write_file(dir / "ok.csv",
               "id,entry,time,status,z1,z2\n"
               "a,0,1.5,event,4.2,1\n"
               "b,0.5,20,cured,3.1,0\n"
               "c,0,7.25,censored,4.9,1\n");
    const LoadedData ld = load_subjects_csv((dir / "ok.csv").string(), {}, std::nullopt);
    CHECK(ld.dataset.n() == 3);
    CHECK(ld.dataset.tau == 20.0);  // inferred from the cured row
    CHECK(ld.z1_names == std::vector<std::string>{"z1", "z2"});
    CHECK(ld.dataset.subjects[0].z1[1] == 4.2);
    CHECK(ld.dataset.subjects[0].z2[0] == 4.2);

    write_file(dir / "badrow.csv",
               "id,entry,time,status,z1\n"
               "a,0,1.5,event,4.2\n"
               "b,3.5,2.0,event,3.1\n");
    try {
        load_subjects_csv((dir / "badrow.csv").string(), {}, 20.0);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }

    write_file(dir / "badstatus.csv", "id,entry,time,status,z1\na,0,1.5,dead,4.2\n");
    CHECK_THROWS_AS(load_subjects_csv((dir / "badstatus.csv").string(), {}, 20.0), DataError);

    write_file(dir / "nocured.csv", "id,entry,time,status,z1\na,0,1.5,event,4.2\n");
    CHECK_THROWS_AS(load_subjects_csv((dir / "nocured.csv").string(), {}, std::nullopt),
                    DataError);
    CHECK_NOTHROW(load_subjects_csv((dir / "nocured.csv").string(), {}, 20.0));

    write_file(dir / "badcol.csv", "id,entry,time,status,z1\na,0,1.5,event,4.2\n");
    CHECK_THROWS_AS(load_subjects_csv((dir / "badcol.csv").string(), {{"nope"}, {}}, 20.0),
                    DataError);
}

TEST_CASE("dataset csv writer round-trips bit-exactly") {
    SimConfig cfg = SimConfig::table1_truth();
    cfg.n = 80;
    cfg.master_seed = 2024;
    cfg.trunc_target = 0.1;
    cfg.trunc_bound = 4.0;
    const Dataset d = gen_trial(cfg, 1);

    const fs::path dir = scratch_dir("roundtrip");
    {
        std::ofstream out(dir / "data.csv");
        write_dataset_csv(out, d, {"z1", "z2"});
    }
    const LoadedData ld = load_subjects_csv((dir / "data.csv").string(), {}, std::nullopt);
    REQUIRE(ld.dataset.n() == d.n());
    for (int i = 0; i < d.n(); ++i) {
        CHECK(ld.dataset.subjects[i].entry == d.subjects[i].entry);
        CHECK(ld.dataset.subjects[i].time == d.subjects[i].time);
        CHECK(ld.dataset.subjects[i].status == d.subjects[i].status);
        CHECK(ld.dataset.subjects[i].z1 == d.subjects[i].z1);
        CHECK(ld.dataset.subjects[i].z2 == d.subjects[i].z2);
    }
}

TEST_CASE("json writer emits parseable, ordered output") {
    std::stringstream ss;
    JsonWriter w(ss);
    w.begin_object();
    w.field("name", "x\"y");
    w.field("value", 0.1);
    w.begin_array("rows");
    w.begin_array_item_object();
    w.field("flag", true);
    w.end_object();
    w.end_array();
    w.end_object();
    const json parsed = json::parse(ss.str());
    CHECK(parsed["name"] == "x\"y");
    CHECK(parsed["value"] == 0.1);
    CHECK(parsed["rows"][0]["flag"] == true);
}

TEST_CASE("cli: simulate trial then fit reproduces the study estimates bitwise") {
    const fs::path dir = scratch_dir("cli_roundtrip");
    const std::string simdir = (dir / "sim").string();
    const std::string fitdir = (dir / "fit").string();
    REQUIRE(run_cli("simulate --n 150 --trials 1 --seed 42 --trunc 10 --cens 20 "
                    "--trunc-bound 4 --cens-bound 40 --emit-data --out " + simdir) == 0);
    REQUIRE(run_cli("fit " + simdir + "/trial_1.csv --out " + fitdir) == 0);

    const json study = json::parse(slurp(fs::path(simdir) / "study.json"));
    const json fit = json::parse(slurp(fs::path(fitdir) / "fit.json"));
    REQUIRE(study["scenarios"][0]["n_converged"] == 1);
    const auto& params = study["scenarios"][0]["params"];
    // alpha0, alpha1, alpha2 then beta1, beta2 in both outputs
    for (int j = 0; j < 3; ++j)
        CHECK(params[j]["estimate_mean"].get<double>() ==
              fit["logistic"][j]["estimate"].get<double>());
    for (int j = 0; j < 2; ++j)
        CHECK(params[3 + j]["estimate_mean"].get<double>() ==
              fit["cox"][j]["estimate"].get<double>());
    CHECK(fit["converged"] == true);
    CHECK(fs::exists(fs::path(fitdir) / "baseline.csv"));
}

TEST_CASE("cli: schema violations exit with code 2") {
    const fs::path dir = scratch_dir("cli_schema");
    write_file(dir / "bad.csv",
               "id,entry,time,status,z1\n"
               "a,0,1.5,event,4.2\n"
               "b,3.5,2.0,event,3.1\n");
    CHECK(run_cli("fit " + (dir / "bad.csv").string() + " --tau 20 --out " + dir.string()) == 2);

    // cured rows must sit exactly at the cure horizon
    write_file(dir / "tau.csv",
               "id,entry,time,status,z1\n"
               "a,0,1.5,event,4.2\n"
               "b,0,19.0,cured,3.1\n");
    CHECK(run_cli("fit " + (dir / "tau.csv").string() + " --tau 20 --out " + dir.string()) == 2);
}

TEST_CASE("cli: infeasible calibration exits with code 5") {
    const fs::path dir = scratch_dir("cli_calib");
    CHECK(run_cli("simulate --n 50 --trials 1 --trunc 60 --out " + dir.string()) == 5);
}

TEST_CASE("cli: simulate output is byte-identical across runs") {
    const fs::path a = scratch_dir("cli_det_a");
    const fs::path b = scratch_dir("cli_det_b");
    const std::string flags =
        "simulate --n 120 --trials 3 --seed 7 --trunc 10 --cens 20 "
        "--trunc-bound 4 --cens-bound 40 --jobs 2 --out ";
    REQUIRE(run_cli(flags + a.string()) == 0);
    REQUIRE(run_cli(flags + b.string()) == 0);
    CHECK(slurp(a / "study.csv") == slurp(b / "study.csv"));
    CHECK(slurp(a / "study.json") == slurp(b / "study.json"));
    CHECK(!slurp(a / "study.csv").empty());
}

TEST_CASE("cli: km splits by level and honors --exclude-cured") {
    const fs::path dir = scratch_dir("cli_km");
    const std::string simdir = (dir / "sim").string();
    REQUIRE(run_cli("simulate --n 120 --trials 1 --seed 9 --emit-data --out " + simdir) == 0);
    const std::string data = simdir + "/trial_1.csv";

    REQUIRE(run_cli("km " + data + " --out " + (dir / "pooled").string()) == 0);
    CHECK(fs::exists(dir / "pooled" / "km.csv"));

    REQUIRE(run_cli("km " + data + " --by z2 --out " + (dir / "by").string()) == 0);
    CHECK(fs::exists(dir / "by" / "km_z2_0.csv"));
    CHECK(fs::exists(dir / "by" / "km_z2_1.csv"));

    REQUIRE(run_cli("km " + data + " --exclude-cured --out " + (dir / "nocure").string()) == 0);
    // dropping the cured shrinks every risk set
    const std::string full = slurp(dir / "pooled" / "km.csv");
    const std::string sub = slurp(dir / "nocure" / "km.csv");
    CHECK(full != sub);
}

TEST_CASE("cli: compare agrees with fit on the cure-model block") {
    const fs::path dir = scratch_dir("cli_compare");
    const std::string simdir = (dir / "sim").string();
    REQUIRE(run_cli("simulate --n 150 --trials 1 --seed 21 --trunc 10 --trunc-bound 4 "
                    "--emit-data --out " + simdir) == 0);
    const std::string data = simdir + "/trial_1.csv";
    REQUIRE(run_cli("fit " + data + " --out " + (dir / "fit").string()) == 0);
    REQUIRE(run_cli("compare " + data + " --out " + (dir / "cmp").string()) == 0);

    const json fit = json::parse(slurp(dir / "fit" / "fit.json"));
    const json cmp = json::parse(slurp(dir / "cmp" / "compare.json"));
    for (int j = 0; j < 3; ++j) {
        CHECK(cmp["logistic"][j]["cure"]["estimate"].get<double>() ==
              fit["logistic"][j]["estimate"].get<double>());
        CHECK(cmp["logistic"][j]["naive"].contains("se"));
    }
    CHECK(cmp["cox"][0]["cure"]["estimate"].get<double>() ==
          fit["cox"][0]["estimate"].get<double>());
    CHECK(fs::exists(dir / "cmp" / "compare.csv"));
}

TEST_CASE("cli: select keeps the strong covariate and drops noise") {
    const fs::path dir = scratch_dir("cli_select");
    const std::string simdir = (dir / "sim").string();
    REQUIRE(run_cli("simulate --n 600 --trials 1 --seed 31 --emit-data --out " + simdir) == 0);

    // append a deterministic noise column
    std::ifstream in(simdir + "/trial_1.csv");
    std::string line;
    std::getline(in, line);
    std::stringstream out;
    out << line << ",noise\n";
    Rng rng(55, 1);
    while (std::getline(in, line)) out << line << ',' << format17(rng.uniform(-1.0, 1.0)) << '\n';
    write_file(dir / "with_noise.csv", out.str());

    REQUIRE(run_cli("select " + (dir / "with_noise.csv").string() + " --out " +
                    (dir / "sel").string()) == 0);
    const json sel = json::parse(slurp(dir / "sel" / "select.json"));
    std::vector<std::string> selected;
    for (const auto& item : sel["selected"]) selected.push_back(item["name"].get<std::string>());
    CHECK(std::find(selected.begin(), selected.end(), "z1") != selected.end());
    CHECK(std::find(selected.begin(), selected.end(), "noise") == selected.end());
    CHECK(sel["screen"].size() == 3);
}
