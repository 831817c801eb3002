// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#include "curefit/data.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace curefit {

const char* to_string(Status s) {
    switch (s) {
        case Status::Event: return "event";
        case Status::Cured: return "cured";
        case Status::Censored: return "censored";
    }
    return "?";
}

Status status_from_string(const std::string& s) {
    if (s == "event") return Status::Event;
    if (s == "cured") return Status::Cured;
    if (s == "censored") return Status::Censored;
    throw DataError("unknown status '" + s + "' (expected event, cured or censored)");
}

Dataset build_dataset(std::vector<SubjectRecord> records, double tau) {
    if (!(std::isfinite(tau) && tau > 0.0)) throw DataError("tau must be finite and positive");
    if (records.empty()) throw DataError("no subjects");

    const auto d1 = records.front().z1.size();
    const auto d2 = records.front().z2.size();
    std::unordered_set<std::string> seen;
    seen.reserve(records.size());

    std::vector<double> times;
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::string where = "subject '" + r.id + "' (row " + std::to_string(i + 1) + ")";
        if (!seen.insert(r.id).second) throw DataError(where + ": duplicate id");
        if (!(std::isfinite(r.entry) && std::isfinite(r.time)))
            throw DataError(where + ": non-finite time");
        if (r.entry < 0.0) throw DataError(where + ": entry < 0");
        if (!(r.entry < r.time)) throw DataError(where + ": entry >= observed time");
        if (r.time > tau) throw DataError(where + ": observed time exceeds tau");
        if (r.entry >= tau) throw DataError(where + ": entry at or beyond tau");
        if (r.status == Status::Event && r.time >= tau)
            throw DataError(where + ": event recorded at the cure horizon");
        if (r.status == Status::Cured && r.time != tau)
            throw DataError(where + ": cured subject must carry time == tau");
        if (r.z1.size() != d1 || r.z2.size() != d2)
            throw DataError(where + ": covariate dimension mismatch");
        if (r.z1.size() == 0 || r.z1[0] != 1.0)
            throw DataError(where + ": z1 must carry a leading intercept 1");
        for (Eigen::Index j = 0; j < r.z1.size(); ++j)
            if (!std::isfinite(r.z1[j])) throw DataError(where + ": non-finite z1");
        for (Eigen::Index j = 0; j < r.z2.size(); ++j)
            if (!std::isfinite(r.z2[j])) throw DataError(where + ": non-finite z2");
        if (r.status == Status::Event) times.push_back(r.time);
    }
    if (times.empty()) throw DataError("dataset contains no events");

    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    Dataset data;
    data.tau = tau;
    data.event_times = std::move(times);
    for (auto& r : records) {
        if (r.status == Status::Event) {
            auto it = std::lower_bound(data.event_times.begin(), data.event_times.end(), r.time);
            r.event_index = static_cast<int>(it - data.event_times.begin());
        } else {
            r.event_index = -1;
        }
    }
    data.subjects = std::move(records);
    return data;
}

StepHazard::StepHazard(std::span<const double> times, const Eigen::VectorXd& jumps)
    : times_(times) {
    if (static_cast<size_t>(jumps.size()) != times.size())
        throw DimensionError("hazard jumps do not match the event times");
    prefix_.resize(times.size());
    double acc = 0.0;
    for (size_t k = 0; k < times.size(); ++k) {
        acc += jumps[static_cast<Eigen::Index>(k)];
        prefix_[k] = acc;
    }
}

int StepHazard::count_below(double t) const {
    return static_cast<int>(std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
}

int StepHazard::last_at_or_before(double t) const {
    return static_cast<int>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin()) - 1;
}

double StepHazard::cum(double t) const {
    const int k = last_at_or_before(t);
    return k < 0 ? 0.0 : prefix_[static_cast<size_t>(k)];
}

}  // namespace curefit
