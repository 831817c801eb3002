// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#include "curefit/survfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace curefit {

KMCurve km_left_truncated(const Dataset& data,
                          const std::function<bool(const SubjectRecord&)>& subgroup) {
    std::vector<const SubjectRecord*> sample;
    sample.reserve(data.subjects.size());
    for (const auto& s : data.subjects)
        if (!subgroup || subgroup(s)) sample.push_back(&s);
    if (sample.empty()) throw DataError("empty subgroup for the product-limit curve");

    std::vector<double> times;
    for (const auto* s : sample)
        if (s->status == Status::Event) times.push_back(s->time);
    if (times.empty()) throw DataError("no events in the subgroup");
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    const double z = 1.959963984540054;  // 97.5% normal quantile
    KMCurve curve;
    curve.points.reserve(times.size());
    double surv = 1.0;
    double green = 0.0;  // sum d / {Y (Y - d)}
    bool dead = false;   // curve reached zero; band undefined afterwards
    for (double t : times) {
        int risk = 0, events = 0;
        for (const auto* s : sample) {
            if (s->entry < t && t <= s->time) ++risk;
            if (s->status == Status::Event && s->time == t) ++events;
        }
        KMCurve::Point pt;
        pt.time = t;
        pt.n_risk = risk;
        pt.n_event = events;
        surv *= 1.0 - static_cast<double>(events) / risk;
        pt.survival = surv;
        if (!dead && risk > events) {
            green += static_cast<double>(events) / (static_cast<double>(risk) * (risk - events));
            pt.std_err = surv * std::sqrt(green);
            // CI on the log-survival scale, clipped into [0, 1].
            const double half = z * std::sqrt(green);
            pt.ci_low = surv * std::exp(-half);
            pt.ci_high = std::min(1.0, surv * std::exp(half));
        } else {
            dead = true;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            pt.std_err = nan;
            pt.ci_low = nan;
            pt.ci_high = nan;
        }
        curve.points.push_back(pt);
    }
    return curve;
}

}  // namespace curefit
