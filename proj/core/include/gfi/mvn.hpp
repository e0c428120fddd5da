#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gfi/rng.hpp"

namespace gfi {

// Fiducial inference for the mean and covariance of a multivariate normal
// sample, parameterized through a rotation in Cayley form and a diagonal
// scale: Y_i = mu + Z Lambda U_i with Z = (I - A)(I + A)^{-1} for a skew
// symmetric A whose strict lower triangle is the free parameter vector.

// Strict lower triangle of a d x d skew matrix, stacked column by column:
// entries (j, k) with j > k, k ascending, j ascending within a column.
// The (j, k) entry equals +veck[idx]; the mirrored (k, j) entry is -veck[idx].
Eigen::MatrixXd skew_from_veck(int d, const Eigen::VectorXd& veck);
Eigen::VectorXd veck_from_skew(const Eigen::MatrixXd& skew);

// Cayley transform Z = (I - A)(I + A)^{-1}; Z is a rotation whenever A is
// skew symmetric.
Eigen::MatrixXd cayley(const Eigen::MatrixXd& skew);

// Inverse Cayley transform A = (I + Z)^{-1}(I - Z). Fails (returns false)
// when I + Z is numerically singular, i.e. Z has an eigenvalue near -1.
bool skew_from_rotation(const Eigen::MatrixXd& z, Eigen::MatrixXd& skew_out);

struct MvnData {
    Eigen::MatrixXd obs;       // n x d, one observation per row
    Eigen::VectorXd mean;      // column means
    Eigen::MatrixXd scatter;   // sum of centered outer products (n times S^2)

    static MvnData from_observations(const Eigen::MatrixXd& obs);
    int n() const { return static_cast<int>(obs.rows()); }
    int d() const { return static_cast<int>(obs.cols()); }
};

// Forward data-generating map y = mu + Z Lambda u.
Eigen::VectorXd dga_forward(const Eigen::VectorXd& mu, const Eigen::VectorXd& veck,
                            const Eigen::VectorXd& lambda, const Eigen::VectorXd& u);

// Gradient block of the forward map for a single observation: d rows,
// d(d+3)/2 columns ordered [mu | lambda | veck].
Eigen::MatrixXd jacobian_columns(const Eigen::VectorXd& y_i, const Eigen::VectorXd& mu,
                                 const Eigen::VectorXd& veck, const Eigen::VectorXd& lambda);

// Volume factor of the stacked gradient evaluated at unit scales and the
// sample mean; the scale and location parts factor out of the full volume,
// leaving this rotation-only piece.
double jstar(const Eigen::MatrixXd& obs, const Eigen::VectorXd& veck);
double log_jstar(const Eigen::MatrixXd& obs, const Eigen::VectorXd& veck);

// Log density (up to a constant) of the marginal fiducial distribution of
// the rotation parameters. -inf outside the unit box or at degenerate
// configurations.
double log_marginal_A(const MvnData& data, const Eigen::VectorXd& veck);

// Conditional draws given the rotation: the inverse squared scales are
// gamma with shape (n-1)/2 and rate (Z^T scatter Z)_ii / 2; the mean is
// normal around the sample mean with covariance Z Lambda^2 Z^T / n.
Eigen::VectorXd sample_lambda_given_A(const MvnData& data, const Eigen::VectorXd& veck,
                                      Rng& rng);
Eigen::VectorXd sample_mu_given(const MvnData& data, const Eigen::VectorXd& veck,
                                const Eigen::VectorXd& lambda, Rng& rng);

struct MvnChainConfig {
    int chains = 2;
    int iterations = 5000;      // total per chain, including burn-in
    int burn_in = 1000;
    double proposal_sd = 0.0;   // 0 picks 0.1 / sqrt(d(d-1))
    std::uint64_t seed = 1;
};

struct MvnDraw {
    int chain = 0;
    Eigen::VectorXd veck;
    Eigen::VectorXd lambda;
    Eigen::VectorXd mu;
    Eigen::MatrixXd cov;        // Z Lambda^2 Z^T
};

struct MvnRun {
    std::vector<MvnDraw> draws;
    std::vector<double> acceptance;  // post burn-in rate per chain
};

// Random-walk Metropolis on the rotation parameters with conditional draws
// of scales and mean. Chain k uses seed config.seed + k. Proposal spread is
// tuned toward 30% acceptance during burn-in and frozen afterwards.
MvnRun run_chains(const MvnData& data, const MvnChainConfig& config);

} // namespace gfi
