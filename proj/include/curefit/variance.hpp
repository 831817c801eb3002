// Copyright (c) 2026 the curefit developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "curefit/em.hpp"

namespace curefit {

// Observed information over the stacked (alpha | beta | lambda) blocks.
struct InformationMatrix {
    Eigen::MatrixXd matrix;
    int dim_alpha = 0;
    int dim_beta = 0;
    // Sup-norm of the summed expected complete-data score; should vanish at
    // the NPMLE, where the Louis identity is exact.
    double score_supnorm = 0.0;
};

struct CovarianceResult {
    Eigen::MatrixXd covariance;
    Eigen::VectorXd se_alpha;
    Eigen::VectorXd se_beta;
};

struct WaldTest {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
};

// E[grad l^c_i | O]: the per-subject expected complete-data score, stacked
// over (alpha, beta, lambda).
Eigen::VectorXd complete_score_expectation(const ModelParams& params, const Dataset& data,
                                           const LatentSummaries& latents, int i);

// E[B_i | O] = E[-hess l^c_i | O].
Eigen::MatrixXd complete_info_expectation(const ModelParams& params, const Dataset& data,
                                          const LatentSummaries& latents, int i);

// E[S_i S_i^T | O], from the conditional variances of (A_i, M_i) and the
// ghost event-time distribution.
Eigen::MatrixXd score_outer_expectation(const ModelParams& params, const Dataset& data,
                                        const LatentSummaries& latents, int i);

// Louis observed information
//   sum_i E[B_i] - sum_i (E[S_i S_i^T] - E[S_i] E[S_i]^T),
// which equals the textbook form with the i != i' cross products whenever the
// summed expected score vanishes; computed in O(n (d+K)^2) without the double
// sum.
InformationMatrix louis_information(const ModelParams& params, const Dataset& data);

// Inverts the information; standard errors are the square roots of the alpha
// and beta diagonal of the inverse. Throws SingularInformationError.
CovarianceResult covariance_and_se(const InformationMatrix& info);

// Quadratic-form test of the selected coordinates of the stacked (alpha,
// beta) estimate against zero, with a chi-square reference on |J| degrees of
// freedom.
WaldTest wald_test(const FitResult& fit, const std::vector<int>& coord_indices);

// Upper tail of the chi-square distribution via the regularized incomplete
// gamma function.
double chisq_pvalue(double statistic, int df);

}  // namespace curefit
