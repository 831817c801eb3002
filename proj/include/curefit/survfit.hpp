// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "curefit/data.hpp"

namespace curefit {

// Product-limit curve over the unique event times of the (sub)sample.
struct KMCurve {
    struct Point {
        double time;
        int n_risk;      // Y(t_k) = #{i : Q_i < t_k <= X_i}
        int n_event;     // d_k
        double survival; // prod_{t_h <= t_k} (1 - d_h / Y_h)
        double std_err;  // Greenwood; NaN once the curve hits zero
        double ci_low;
        double ci_high;
    };
    std::vector<Point> points;
};

// Left-truncated Kaplan-Meier with Greenwood variance and 95% confidence
// bands on the log-survival scale. The optional predicate restricts the
// sample (subgroup curves).
KMCurve km_left_truncated(const Dataset& data,
                          const std::function<bool(const SubjectRecord&)>& subgroup = nullptr);

}  // namespace curefit
