#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace gfi {

// Volume factor D(M) = det(M^T M)^{1/2} for a tall matrix M (rows >= cols),
// computed as the product of |R_ii| from a Householder QR factorization.
// Returns 0 when M is rank deficient. Throws std::invalid_argument when
// rows < cols.
double pseudo_det(const Eigen::MatrixXd& m);

// log of pseudo_det; -inf when the matrix is rank deficient.
double log_pseudo_det(const Eigen::MatrixXd& m);

// Covariance structure sigma_a2 * S + sigma_e2 * I where S is block
// diagonal with all-ones blocks following group_sizes. Returns the log
// determinant together with the solution of (sigma_a2 S + sigma_e2 I) x = v,
// both computed per block in closed form (O(N) total).
// Requires sigma_e2 > 0, sigma_a2 >= 0, v.size() == sum(group_sizes).
std::pair<double, Eigen::VectorXd> re_cov_logdet_solve(
    double sigma_a2, double sigma_e2,
    const std::vector<int>& group_sizes,
    const Eigen::VectorXd& v);

} // namespace gfi
