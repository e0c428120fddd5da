#include "gfi/linalg.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gfi {

double pseudo_det(const Eigen::MatrixXd& m) {
    if (m.rows() < m.cols())
        throw std::invalid_argument("pseudo_det: matrix must have rows >= cols");
    if (m.cols() == 0) return 1.0;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const auto r = qr.matrixQR().topLeftCorner(m.cols(), m.cols());
    double prod = 1.0;
    for (Eigen::Index i = 0; i < m.cols(); ++i) prod *= std::fabs(r(i, i));
    return prod;
}

double log_pseudo_det(const Eigen::MatrixXd& m) {
    if (m.rows() < m.cols())
        throw std::invalid_argument("log_pseudo_det: matrix must have rows >= cols");
    if (m.cols() == 0) return 0.0;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const auto r = qr.matrixQR().topLeftCorner(m.cols(), m.cols());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        const double d = std::fabs(r(i, i));
        if (d == 0.0) return -std::numeric_limits<double>::infinity();
        sum += std::log(d);
    }
    return sum;
}

std::pair<double, Eigen::VectorXd> re_cov_logdet_solve(
    double sigma_a2, double sigma_e2,
    const std::vector<int>& group_sizes,
    const Eigen::VectorXd& v) {
    if (!(sigma_e2 > 0.0))
        throw std::invalid_argument("re_cov_logdet_solve: sigma_e2 must be positive");
    if (sigma_a2 < 0.0)
        throw std::invalid_argument("re_cov_logdet_solve: sigma_a2 must be nonnegative");
    const long long total = std::accumulate(group_sizes.begin(), group_sizes.end(), 0LL);
    if (total != v.size())
        throw std::invalid_argument("re_cov_logdet_solve: v length must match group sizes");

    double logdet = 0.0;
    Eigen::VectorXd x(v.size());
    Eigen::Index off = 0;
    for (const int ni : group_sizes) {
        if (ni <= 0)
            throw std::invalid_argument("re_cov_logdet_solve: group sizes must be positive");
        const double tail = sigma_e2 + ni * sigma_a2;
        logdet += (ni - 1) * std::log(sigma_e2) + std::log(tail);
        // Sherman-Morrison on the all-ones block: inv = I/se2 - (sa2/(se2*tail)) 11^T.
        const double gsum = v.segment(off, ni).sum();
        const double shift = sigma_a2 * gsum / (sigma_e2 * tail);
        x.segment(off, ni) = v.segment(off, ni) / sigma_e2;
        x.segment(off, ni).array() -= shift;
        off += ni;
    }
    return {logdet, std::move(x)};
}

} // namespace gfi
