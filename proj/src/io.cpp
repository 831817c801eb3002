// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#include "curefit/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace curefit {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(where + ": cannot parse number '" + s + "'");
    }
}

}  // namespace

LoadedData load_subjects_csv(const std::string& path, const ModelColumns& columns,
                             std::optional<double> tau_override) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty input file");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "entry" || header[2] != "time" ||
        header[3] != "status")
        throw DataError("header must start with id,entry,time,status");

    LoadedData out;
    for (size_t c = 4; c < header.size(); ++c) {
        if (header[c].empty()) throw DataError("empty covariate column name");
        out.covariate_names.push_back(header[c]);
        out.columns[header[c]] = {};
    }

    auto resolve = [&](const std::vector<std::string>& wanted) {
        if (wanted.empty()) return out.covariate_names;
        for (const auto& w : wanted)
            if (std::find(out.covariate_names.begin(), out.covariate_names.end(), w) ==
                out.covariate_names.end())
                throw DataError("unknown covariate column '" + w + "'");
        return wanted;
    };
    out.z1_names = resolve(columns.z1);
    out.z2_names = resolve(columns.z2);

    struct RawRow {
        std::string id;
        double entry, time;
        Status status;
        std::vector<double> covs;
    };
    std::vector<RawRow> raw;
    int rowno = 1;
    while (std::getline(in, line)) {
        ++rowno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const std::string where = "row " + std::to_string(rowno);
        if (cells.size() != header.size())
            throw DataError(where + ": expected " + std::to_string(header.size()) + " fields");
        RawRow r;
        r.id = cells[0];
        r.entry = parse_double(cells[1], where);
        r.time = parse_double(cells[2], where);
        try {
            r.status = status_from_string(cells[3]);
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        for (size_t c = 4; c < cells.size(); ++c) r.covs.push_back(parse_double(cells[c], where));
        raw.push_back(std::move(r));
    }
    if (raw.empty()) throw DataError("no data rows");

    double tau;
    if (tau_override) {
        tau = *tau_override;
    } else {
        tau = 0.0;
        bool any_cured = false;
        for (const auto& r : raw)
            if (r.status == Status::Cured) {
                any_cured = true;
                tau = std::max(tau, r.time);
            }
        if (!any_cured)
            throw DataError("no cured rows to infer tau from; pass --tau explicitly");
    }

    // Row-local invariants are checked here with file line numbers so CLI
    // diagnostics point at the offending row; build_dataset re-checks them
    // as part of its own contract.
    for (size_t j = 0; j < raw.size(); ++j) {
        const auto& r = raw[j];
        const std::string where = "row " + std::to_string(j + 2);
        if (!(r.entry < r.time)) throw DataError(where + ": entry >= observed time");
        if (r.entry < 0.0) throw DataError(where + ": entry < 0");
        if (r.time > tau) throw DataError(where + ": observed time exceeds tau");
        if (r.status == Status::Event && r.time >= tau)
            throw DataError(where + ": event recorded at or beyond tau");
        if (r.status == Status::Cured && r.time != tau)
            throw DataError(where + ": cured subject must carry time == tau (" +
                            format17(tau) + ")");
    }

    auto index_of = [&](const std::string& name) {
        return static_cast<size_t>(std::find(out.covariate_names.begin(),
                                             out.covariate_names.end(), name) -
                                   out.covariate_names.begin());
    };
    std::vector<SubjectRecord> records;
    records.reserve(raw.size());
    for (const auto& r : raw) {
        SubjectRecord rec;
        rec.id = r.id;
        rec.entry = r.entry;
        rec.time = r.time;
        rec.status = r.status;
        rec.z1.resize(static_cast<Eigen::Index>(out.z1_names.size()) + 1);
        rec.z1[0] = 1.0;
        for (size_t j = 0; j < out.z1_names.size(); ++j)
            rec.z1[static_cast<Eigen::Index>(j) + 1] = r.covs[index_of(out.z1_names[j])];
        rec.z2.resize(static_cast<Eigen::Index>(out.z2_names.size()));
        for (size_t j = 0; j < out.z2_names.size(); ++j)
            rec.z2[static_cast<Eigen::Index>(j)] = r.covs[index_of(out.z2_names[j])];
        records.push_back(std::move(rec));
        for (size_t c = 0; c < out.covariate_names.size(); ++c)
            out.columns[out.covariate_names[c]].push_back(r.covs[c]);
    }
    out.dataset = build_dataset(std::move(records), tau);
    return out;
}

std::string format17(double value) {
    if (std::isnan(value)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_dataset_csv(std::ostream& os, const Dataset& data,
                       const std::vector<std::string>& covariate_names) {
    os << "id,entry,time,status";
    for (const auto& name : covariate_names) os << ',' << name;
    os << '\n';
    // Covariates are emitted from z1 past the intercept; the generator and
    // the CSV loader both keep that ordering.
    for (const auto& s : data.subjects) {
        os << s.id << ',' << format17(s.entry) << ',' << format17(s.time) << ','
           << to_string(s.status);
        for (size_t c = 0; c < covariate_names.size(); ++c)
            os << ',' << format17(s.z1[static_cast<Eigen::Index>(c) + 1]);
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    return out;
}

void JsonWriter::comma() {
    if (!first_.empty()) {
        if (!first_.back()) os_ << ",";
        first_.back() = false;
    }
    if (depth_ > 0) {
        os_ << '\n';
        for (int i = 0; i < depth_; ++i) os_ << "  ";
    }
}

void JsonWriter::key(const std::string& k) { os_ << '"' << json_escape(k) << "\": "; }

void JsonWriter::begin_object() {
    os_ << '{';
    ++depth_;
    first_.push_back(true);
}

void JsonWriter::begin_object(const std::string& k) {
    comma();
    key(k);
    os_ << '{';
    ++depth_;
    first_.push_back(true);
}

void JsonWriter::begin_array_item_object() {
    comma();
    os_ << '{';
    ++depth_;
    first_.push_back(true);
}

void JsonWriter::end_object() {
    --depth_;
    first_.pop_back();
    os_ << '\n';
    for (int i = 0; i < depth_; ++i) os_ << "  ";
    os_ << '}';
    if (depth_ == 0) os_ << '\n';
}

void JsonWriter::begin_array(const std::string& k) {
    comma();
    key(k);
    os_ << '[';
    ++depth_;
    first_.push_back(true);
}

void JsonWriter::end_array() {
    --depth_;
    first_.pop_back();
    os_ << '\n';
    for (int i = 0; i < depth_; ++i) os_ << "  ";
    os_ << ']';
}

void JsonWriter::field(const std::string& k, const std::string& v) {
    comma();
    key(k);
    os_ << '"' << json_escape(v) << '"';
}

void JsonWriter::field(const std::string& k, const char* v) { field(k, std::string(v)); }

void JsonWriter::field(const std::string& k, double v) {
    comma();
    key(k);
    if (std::isnan(v)) os_ << "null";
    else os_ << format17(v);
}

void JsonWriter::field(const std::string& k, int v) {
    comma();
    key(k);
    os_ << v;
}

void JsonWriter::field(const std::string& k, long v) {
    comma();
    key(k);
    os_ << v;
}

void JsonWriter::field(const std::string& k, bool v) {
    comma();
    key(k);
    os_ << (v ? "true" : "false");
}

void JsonWriter::field_u64(const std::string& k, unsigned long long v) {
    comma();
    key(k);
    os_ << v;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for digesting");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char hex[32];
    std::snprintf(hex, sizeof(hex), "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void write_manifest(JsonWriter& w, const RunManifest& m) {
    w.begin_object("manifest");
    w.field("command", m.command);
    w.field("artifact_version", m.artifact_version);
    if (!m.input_digest.empty()) w.field("input_digest", m.input_digest);
    if (m.seed) w.field("seed", static_cast<long>(*m.seed));
    w.end_object();
}

void write_baseline_csv(std::ostream& os, const Dataset& data, const ModelParams& params) {
    os << "time,lambda,cum_hazard\n";
    double cum = 0.0;
    for (int k = 0; k < data.num_event_times(); ++k) {
        cum += params.lambda[k];
        os << format17(data.event_times[static_cast<size_t>(k)]) << ','
           << format17(params.lambda[k]) << ',' << format17(cum) << '\n';
    }
}

void write_km_csv(std::ostream& os, const KMCurve& curve) {
    os << "time,n_risk,n_event,survival,std_err,ci_low,ci_high\n";
    for (const auto& pt : curve.points) {
        os << format17(pt.time) << ',' << pt.n_risk << ',' << pt.n_event << ','
           << format17(pt.survival) << ',' << format17(pt.std_err) << ',' << format17(pt.ci_low)
           << ',' << format17(pt.ci_high) << '\n';
    }
}

}  // namespace curefit
