#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gfi/binom_np.hpp"

namespace gfi {

// Scalar summaries of a symmetric positive definite matrix.
double spectral_norm(const Eigen::MatrixXd& m);   // largest |eigenvalue|
double frobenius_norm(const Eigen::MatrixXd& m);
double log_det(const Eigen::MatrixXd& m);         // requires SPD input

// Affine-invariant distance between SPD matrices: the Frobenius norm of
// log(a^{-1/2} b a^{-1/2}), computed from the generalized eigenvalues.
double fm_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Stein (entropy) loss tr(a^{-1} b) - log det(a^{-1} b) - d. Asymmetric;
// zero iff a == b.
double stein_loss(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Quantile of the values at probability p, linear interpolation between
// order statistics (the convention with h = (n - 1) p).
double quantile_type7(std::vector<double> values, double p);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// Equal-tailed interval spanning the level mass of the values; level 0
// collapses to the median.
Interval central_interval(const std::vector<double>& values, double level);

struct BallRegion {
    Eigen::MatrixXd center;
    double radius = 0.0;
};

using MatrixMetric =
    std::function<double(const Eigen::MatrixXd&, const Eigen::MatrixXd&)>;

// Metric ball around the elementwise mean of the draws whose radius is the
// level quantile of metric(draw, center). Membership: metric(x, center)
// <= radius with the same metric orientation.
BallRegion ball_region(const std::vector<Eigen::MatrixXd>& draws, double level,
                       const MatrixMetric& metric);

bool ball_contains(const BallRegion& region, const Eigen::MatrixXd& x,
                   const MatrixMetric& metric);

// Rectangular belief and plausibility regions for the joint (n, mu) sets
// produced by the two-parameter binomial sampler.
//
// Both boxes share a center (componentwise medians of the per-draw
// representative points) and an aspect (componentwise IQRs, falling back to
// 1 when degenerate). Each draw contributes a minimal box multiplier:
// containing the whole set for the belief box (infinite when the set is
// unbounded), touching the set anywhere for the plausibility box (unbounded
// draws contribute a synthetic rung at the recorded cut with the limit
// interval). The returned boxes use the ceil(level * K)-th smallest
// multiplier. When too few draws are bounded to reach the belief level the
// belief box is flagged unbounded: its upper n edge is infinite and the
// remaining edges use the largest finite multiplier.
struct NpBox {
    double n_lo = 0.0;
    double n_hi = 0.0;
    double mu_lo = 0.0;
    double mu_hi = 0.0;
    bool unbounded = false;

    bool contains(double n, double mu) const {
        return n >= n_lo && (unbounded || n <= n_hi) && mu >= mu_lo && mu <= mu_hi;
    }
};

struct NpBoxPair {
    NpBox belief;
    NpBox plaus;
};

NpBoxPair np_boxes(const std::vector<NpDrawSummary>& draws, double level);

} // namespace gfi
