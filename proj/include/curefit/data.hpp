// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "curefit/errors.hpp"

namespace curefit {

// Observation status at the end of follow-up. Exactly one of the three holds
// per subject: an observed event before the horizon, observed cure at the
// horizon, or loss to follow-up before either.
enum class Status { Event, Cured, Censored };

const char* to_string(Status s);
Status status_from_string(const std::string& s);

struct SubjectRecord {
    std::string id;
    double entry = 0.0;  // left-truncation time Q, in [0, tau)
    double time = 0.0;   // observed time X = min(T, C), in (0, tau]
    Status status = Status::Censored;
    Eigen::VectorXd z1;  // incidence covariates, leading component fixed at 1
    Eigen::VectorXd z2;  // latency covariates, no intercept
    // Index into Dataset::event_times when status == Event, else -1.
    int event_index = -1;
};

// Immutable cohort: subjects, the cure horizon tau, and the sorted unique
// observed event times t_1 < ... < t_K.
struct Dataset {
    std::vector<SubjectRecord> subjects;
    double tau = 0.0;
    std::vector<double> event_times;

    int n() const { return static_cast<int>(subjects.size()); }
    int num_event_times() const { return static_cast<int>(event_times.size()); }
    int dim_z1() const { return subjects.empty() ? 0 : static_cast<int>(subjects.front().z1.size()); }
    int dim_z2() const { return subjects.empty() ? 0 : static_cast<int>(subjects.front().z2.size()); }
};

// Validates the record invariants, extracts the sorted unique event times and
// assigns every event subject its time index. Throws DataError on the first
// violated row.
Dataset build_dataset(std::vector<SubjectRecord> records, double tau);

// Baseline cumulative hazard as a right-continuous step function with jumps
// at the event times: the jump at t_k is included in cum(t_k).
class StepHazard {
   public:
    StepHazard(std::span<const double> times, const Eigen::VectorXd& jumps);

    // Lambda(t) = sum of jumps at t_k <= t.
    double cum(double t) const;
    // Lambda(t_k) by index (0-based), jump at t_k included.
    double cum_at(int k) const { return prefix_[static_cast<size_t>(k)]; }
    // #{k : t_k < t}; also the first index at or above t.
    int count_below(double t) const;
    // #{k : t_k <= t} - 1, i.e. the largest index with t_k <= t, or -1.
    int last_at_or_before(double t) const;
    int size() const { return static_cast<int>(prefix_.size()); }

   private:
    std::span<const double> times_;
    std::vector<double> prefix_;  // prefix_[k] = lambda_1 + ... + lambda_{k+1}
};

}  // namespace curefit
