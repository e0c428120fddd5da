#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gfi/rng.hpp"

namespace gfi {

// Fiducial inference for the normal model with one grouped random effect:
// Y = X beta + eta + eps, eta constant within groups with variance
// sigma_a2, eps iid with variance sigma_e2. The fiducial density is the
// Gaussian likelihood times the volume factor of the gradient of the
// forward map with respect to (beta, sigma_e2, sigma_a2).

struct ReModel {
    std::vector<int> group_sizes;
    // Fixed-effect design, one row per observation. Empty means an
    // intercept-only column of ones.
    Eigen::MatrixXd design;
    // When false the grouped effect is dropped: the covariance is
    // sigma_e2 * I and sigma_a2 is pinned at zero.
    bool include_group_effect = true;

    int total_size() const;
    Eigen::MatrixXd design_or_intercept() const;
};

struct ReParams {
    Eigen::VectorXd beta;
    double sigma_a2 = 0.0;
    double sigma_e2 = 1.0;
};

// Volume factor det(M^T M)^{1/2} of the stacked gradient
// [X | dY/dsigma_e2 | dY/dsigma_a2] with dY/dsigma_e2 = Sigma^{-1} r / 2 and
// dY/dsigma_a2 = S Sigma^{-1} r / 2, where r = y - X beta and S sums within
// groups.
double re_jacobian(const Eigen::VectorXd& y, const ReModel& model, const ReParams& params);

// Log fiducial density: Gaussian log likelihood plus log of the volume
// factor; -inf for invalid variances or a degenerate gradient.
double re_log_density(const Eigen::VectorXd& y, const ReModel& model, const ReParams& params);

struct ReChainConfig {
    int iterations = 5000;     // total, including burn-in
    int burn_in = 1000;
    double proposal_scale = 0.0;  // 0 picks an automatic starting scale
    std::uint64_t seed = 1;
};

struct ReDraw {
    Eigen::VectorXd beta;
    double sigma_a2 = 0.0;
    double sigma_e2 = 0.0;
};

struct ReRun {
    std::vector<ReDraw> draws;
    double acceptance = 0.0;   // post burn-in rate
};

// Random-walk Metropolis on (beta, log sigma_a2, log sigma_e2) with the log
// transform absorbed into the target. Scale is tuned toward 30% acceptance
// during burn-in and frozen afterwards.
ReRun re_sample(const Eigen::VectorXd& y, const ReModel& model, const ReChainConfig& config);

} // namespace gfi
