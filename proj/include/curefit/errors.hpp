// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace curefit {

// Base class for all curefit failures.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input rows violate the data contract (message carries the row/subject).
struct DataError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

// Logistic objective unbounded: some direction separates the two classes.
struct SeparationError : Error {
    using Error::Error;
};

// An inner Newton solver ran out of iterations.
struct MaxIterError : Error {
    using Error::Error;
};

struct SingularHessianError : Error {
    using Error::Error;
};

// A Newton step failed to ascend even after ridge regularization.
struct NonConcaveError : Error {
    using Error::Error;
};

// The geometric ghost-count expectation is undefined (mass below an entry
// time reached 1); indicates a baseline hazard blow-up.
struct GhostMassOverflowError : Error {
    using Error::Error;
};

struct SingularInformationError : Error {
    using Error::Error;
};

// A simulation bound target cannot be met within its admissible range.
struct CalibrationError : Error {
    using Error::Error;
};

}  // namespace curefit
