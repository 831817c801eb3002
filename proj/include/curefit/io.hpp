// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "curefit/data.hpp"
#include "curefit/em.hpp"
#include "curefit/simulate.hpp"
#include "curefit/survfit.hpp"

namespace curefit {

// Column assignment for the two model parts. Empty lists mean "every
// covariate column"; a column may appear in both parts.
struct ModelColumns {
    std::vector<std::string> z1;
    std::vector<std::string> z2;
};

struct LoadedData {
    Dataset dataset;
    std::vector<std::string> z1_names;  // without the implicit intercept
    std::vector<std::string> z2_names;
    std::vector<std::string> covariate_names;  // all covariate columns, CSV order
    // Raw covariate values by column, aligned with dataset.subjects.
    std::map<std::string, std::vector<double>> columns;
};

// Reads the `id,entry,time,status,<covariates...>` schema. tau defaults to
// the largest cured time when not overridden. Throws DataError with the
// offending row number.
LoadedData load_subjects_csv(const std::string& path, const ModelColumns& columns,
                             std::optional<double> tau_override);

void write_dataset_csv(std::ostream& os, const Dataset& data,
                       const std::vector<std::string>& covariate_names);

// Minimal deterministic JSON emitter: insertion-ordered keys, doubles
// rendered with 17 significant digits so values round-trip exactly.
class JsonWriter {
   public:
    explicit JsonWriter(std::ostream& os) : os_(os) {}
    void begin_object();
    void end_object();
    void begin_array(const std::string& key);
    void begin_object(const std::string& key);
    void begin_array_item_object();
    void end_array();
    void field(const std::string& key, const std::string& value);
    void field(const std::string& key, const char* value);
    void field(const std::string& key, double value);
    void field(const std::string& key, int value);
    void field(const std::string& key, long value);
    void field(const std::string& key, bool value);
    void field_u64(const std::string& key, unsigned long long value);

   private:
    void comma();
    void indent();
    void key(const std::string& k);
    std::ostream& os_;
    int depth_ = 0;
    std::vector<bool> first_{};
};

std::string format17(double value);
std::string json_escape(const std::string& s);

// FNV-1a 64-bit digest of a file's bytes, as a hex string.
std::string file_digest(const std::string& path);

// Run provenance embedded in every JSON output. Wall-clock timestamps are
// deliberately excluded so outputs are byte-identical given the same seed;
// timing goes to stderr instead.
struct RunManifest {
    std::string command;
    std::string artifact_version = "curefit 0.1.0";
    std::string input_digest;
    std::optional<long long> seed;
};

void write_manifest(JsonWriter& w, const RunManifest& manifest);

void write_baseline_csv(std::ostream& os, const Dataset& data, const ModelParams& params);
void write_km_csv(std::ostream& os, const KMCurve& curve);

}  // namespace curefit
