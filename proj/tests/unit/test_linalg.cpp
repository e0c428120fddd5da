#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gfi/linalg.hpp"
#include "gfi/rng.hpp"

using namespace gfi;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, Rng& rng) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

// Dense reference for the grouped covariance: build sigma_a2 * S + sigma_e2 * I
// explicitly and use a full factorization.
std::pair<double, Eigen::VectorXd> dense_logdet_solve(double sa2, double se2,
                                                      const std::vector<int>& sizes,
                                                      const Eigen::VectorXd& v) {
    int n = 0;
    for (int s : sizes) n += s;
    Eigen::MatrixXd sigma = se2 * Eigen::MatrixXd::Identity(n, n);
    int at = 0;
    for (int s : sizes) {
        sigma.block(at, at, s, s).array() += sa2;
        at += s;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return {logdet, llt.solve(v)};
}

} // namespace

TEST_SUITE("linalg") {

TEST_CASE("pseudo determinant basics") {
    CHECK(pseudo_det(Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-14));

    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd m = random_matrix(4, 4, rng);
        CHECK(pseudo_det(m) == doctest::Approx(std::abs(m.determinant())).epsilon(1e-10));
    }
}

TEST_CASE("pseudo determinant of tall matrices") {
    Rng rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd m = random_matrix(7, 3, rng);
        const double want = std::sqrt((m.transpose() * m).determinant());
        CHECK(pseudo_det(m) == doctest::Approx(want).epsilon(1e-9));
        CHECK(log_pseudo_det(m) == doctest::Approx(std::log(want)).epsilon(1e-9));
    }
}

TEST_CASE("pseudo determinant edge cases") {
    Eigen::MatrixXd m(4, 2);
    m.col(0) << 1, 2, 3, 4;
    m.col(1) = 2.0 * m.col(0);
    // Collinear columns collapse to roundoff scale under QR.
    CHECK(pseudo_det(m) < 1e-12);
    CHECK(log_pseudo_det(m) < -25.0);

    Eigen::MatrixXd z(3, 2);
    z.col(0) << 1, 1, 1;
    z.col(1).setZero();
    CHECK(pseudo_det(z) == 0.0);
    CHECK(std::isinf(log_pseudo_det(z)));
    CHECK(log_pseudo_det(z) < 0.0);

    CHECK_THROWS_AS((void)pseudo_det(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("grouped covariance logdet and solve match a dense factorization") {
    Rng rng(13);
    const std::vector<std::vector<int>> layouts = {{1}, {3}, {1, 3, 2}, {4, 4, 4}, {2, 5, 1, 7}};
    for (const auto& sizes : layouts) {
        int n = 0;
        for (int s : sizes) n += s;
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = rng.normal();
        for (double sa2 : {0.0, 0.1, 1.0, 17.0}) {
            for (double se2 : {0.2, 1.0, 10.0}) {
                const auto got = re_cov_logdet_solve(sa2, se2, sizes, v);
                const auto want = dense_logdet_solve(sa2, se2, sizes, v);
                CHECK(got.first == doctest::Approx(want.first).epsilon(1e-10));
                CHECK((got.second - want.second).cwiseAbs().maxCoeff() <
                      1e-9 * (1.0 + want.second.cwiseAbs().maxCoeff()));
            }
        }
    }
}

TEST_CASE("grouped covariance closed-form hand values") {
    // One group of two, unit variances: sigma = I + J has eigenvalues {3, 1}.
    Eigen::VectorXd v(2);
    v << 1.0, 0.0;
    const auto r = re_cov_logdet_solve(1.0, 1.0, {2}, v);
    CHECK(r.first == doctest::Approx(std::log(3.0)).epsilon(1e-12));

    // No group effect: plain diagonal.
    Eigen::VectorXd w(3);
    w << 3.0, -1.5, 0.75;
    const auto d = re_cov_logdet_solve(0.0, 4.0, {3}, w);
    CHECK(d.first == doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-12));
    CHECK((d.second - w / 4.0).cwiseAbs().maxCoeff() < 1e-12);
}

} // TEST_SUITE
