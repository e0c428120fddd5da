#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gfi/regions.hpp"
#include "gfi/rng.hpp"

using namespace gfi;

namespace {

Eigen::MatrixXd random_spd(int d, Rng& rng, double jitter = 0.3) {
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = jitter * rng.normal();
    Eigen::MatrixXd s = 0.5 * (m + m.transpose());
    return Eigen::MatrixXd::Identity(d, d) + s * s.transpose() + 0.05 * s;
}

NpDrawSummary bounded_draw(long long n_lo, long long n_hi, double mu_lo, double mu_hi) {
    NpDrawSummary d;
    d.n_min = n_lo;
    d.n_last = n_hi;
    d.mu_lo_at_min = mu_lo;
    d.mu_hi_at_min = mu_hi;
    d.mu_min = mu_lo;
    d.mu_max = mu_hi;
    d.rep_n = n_lo;
    d.rep_mu = 0.5 * (mu_lo + mu_hi);
    for (long long n = n_lo; n <= n_hi; ++n) d.segment.push_back({n, mu_lo, mu_hi});
    return d;
}

} // namespace

TEST_SUITE("regions") {

TEST_CASE("matrix summaries") {
    Eigen::MatrixXd d2(2, 2);
    d2 << 4.0, 0.0, 0.0, 1.0;
    CHECK(spectral_norm(d2) == doctest::Approx(4.0));
    CHECK(frobenius_norm(d2) == doctest::Approx(std::sqrt(17.0)));
    CHECK(log_det(d2) == doctest::Approx(std::log(4.0)));

    Eigen::MatrixXd s(2, 2);
    s << 2.0, 1.0, 1.0, 2.0;
    CHECK(spectral_norm(s) == doctest::Approx(3.0));
    CHECK(frobenius_norm(s) == doctest::Approx(std::sqrt(10.0)));
    CHECK(log_det(s) == doctest::Approx(std::log(3.0)));

    for (int d = 1; d <= 5; ++d) {
        CHECK(frobenius_norm(Eigen::MatrixXd::Identity(d, d)) ==
              doctest::Approx(std::sqrt(static_cast<double>(d))));
    }

    Eigen::MatrixXd indef(2, 2);
    indef << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS((void)log_det(indef), std::invalid_argument);
}

TEST_CASE("affine-invariant distance") {
    Eigen::MatrixXd one(1, 1), e2(1, 1);
    one << 1.0;
    e2 << std::exp(2.0);
    CHECK(fm_distance(one, e2) == doctest::Approx(2.0));
    CHECK(fm_distance(e2, one) == doctest::Approx(2.0));

    Rng rng(401);
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::MatrixXd a = random_spd(3, rng);
        const Eigen::MatrixXd b = random_spd(3, rng);
        CHECK(fm_distance(a, a) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(fm_distance(a, b) == doctest::Approx(fm_distance(b, a)).epsilon(1e-9));
        CHECK(fm_distance(a, b) > 0.0);

        // Congruence transforms leave the distance unchanged.
        Eigen::MatrixXd c(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) c(i, j) = rng.normal();
        c += 3.0 * Eigen::MatrixXd::Identity(3, 3);
        const Eigen::MatrixXd ca = c * a * c.transpose();
        const Eigen::MatrixXd cb = c * b * c.transpose();
        CHECK(fm_distance(ca, cb) == doctest::Approx(fm_distance(a, b)).epsilon(1e-8));
    }

    const Eigen::MatrixXd id4 = Eigen::MatrixXd::Identity(4, 4);
    CHECK(fm_distance(id4, 3.0 * id4) == doctest::Approx(2.0 * std::log(3.0)));
}

TEST_CASE("entropy loss") {
    const Eigen::MatrixXd id3 = Eigen::MatrixXd::Identity(3, 3);
    CHECK(stein_loss(id3, 2.0 * id3) == doctest::Approx(3.0 * (1.0 - std::log(2.0))));
    CHECK(stein_loss(id3, id3) == doctest::Approx(0.0));

    Rng rng(402);
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::MatrixXd a = random_spd(3, rng);
        const Eigen::MatrixXd b = random_spd(3, rng);
        CHECK(stein_loss(a, b) > 0.0);
        CHECK(stein_loss(a, a) == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("quantiles interpolate between order statistics") {
    CHECK(quantile_type7({5.0, 1.0, 3.0, 2.0, 4.0}, 0.5) == doctest::Approx(3.0));
    CHECK(quantile_type7({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_type7({20.0, 10.0}, 0.3) == doctest::Approx(13.0));
    CHECK(quantile_type7({7.0}, 0.99) == doctest::Approx(7.0));
    CHECK(quantile_type7({1.0, 2.0, 3.0}, 0.0) == doctest::Approx(1.0));
    CHECK(quantile_type7({1.0, 2.0, 3.0}, 1.0) == doctest::Approx(3.0));
    CHECK_THROWS_AS((void)quantile_type7({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS((void)quantile_type7({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("central intervals") {
    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = i + 1.0;
    const Interval i90 = central_interval(v, 0.90);
    CHECK(i90.lo == doctest::Approx(5.95));
    CHECK(i90.hi == doctest::Approx(95.05));
    CHECK(i90.contains(50.0));
    CHECK(i90.contains(5.95));
    CHECK_FALSE(i90.contains(96.0));

    const Interval med = central_interval(v, 0.0);
    CHECK(med.lo == doctest::Approx(med.hi));
    CHECK(med.lo == doctest::Approx(50.5));

    CHECK_THROWS_AS((void)central_interval(v, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)central_interval(v, -0.1), std::invalid_argument);
}

TEST_CASE("metric balls cover the requested mass") {
    Rng rng(403);
    std::vector<Eigen::MatrixXd> draws;
    for (int k = 0; k < 500; ++k) draws.push_back(random_spd(2, rng, 0.15));

    const MatrixMetric frob = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
        return frobenius_norm(x - c);
    };
    const BallRegion r90 = ball_region(draws, 0.90, frob);
    const BallRegion r50 = ball_region(draws, 0.50, frob);
    CHECK(r50.radius < r90.radius);
    CHECK(ball_contains(r90, r90.center, frob));

    int inside = 0;
    for (const auto& d : draws) inside += ball_contains(r90, d, frob) ? 1 : 0;
    const double frac = inside / 500.0;
    CHECK(frac >= 0.88);
    CHECK(frac <= 0.93);

    // The same construction with the affine-invariant metric, centered well
    // inside the cone.
    const MatrixMetric fm = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
        return fm_distance(c, x);
    };
    const BallRegion g = ball_region(draws, 0.95, fm);
    int in2 = 0;
    for (const auto& d : draws) in2 += ball_contains(g, d, fm) ? 1 : 0;
    CHECK(in2 / 500.0 >= 0.93);

    CHECK_THROWS_AS((void)ball_region({}, 0.9, frob), std::invalid_argument);
}

TEST_CASE("joint boxes rank draws by minimal multipliers") {
    // Ten synthetic draws centered near n = 20, mu = 5, with one straggler.
    std::vector<NpDrawSummary> draws;
    for (int i = 0; i < 9; ++i) {
        draws.push_back(bounded_draw(18 + (i % 3), 20 + (i % 4), 4.0 + 0.1 * i,
                                     5.0 + 0.15 * i));
    }
    draws.push_back(bounded_draw(35, 44, 9.0, 11.0));

    const NpBoxPair pair = np_boxes(draws, 0.9);
    CHECK_FALSE(pair.belief.unbounded);
    CHECK(pair.belief.n_lo < pair.belief.n_hi);
    CHECK(pair.belief.mu_lo < pair.belief.mu_hi);

    // The belief box must fully contain at least ceil(0.9 * 10) = 9 sets,
    // and the plausibility box must intersect at least as many.
    int fully = 0, touched = 0;
    for (const auto& d : draws) {
        const bool all_in = pair.belief.contains(static_cast<double>(d.n_min), d.mu_min) &&
                            pair.belief.contains(static_cast<double>(d.n_last), d.mu_max);
        fully += all_in ? 1 : 0;
        bool any = false;
        for (const auto& e : d.segment) {
            const double mu_near = std::clamp(0.5 * (pair.plaus.mu_lo + pair.plaus.mu_hi),
                                              e.mu_lo, e.mu_hi);
            any = any || pair.plaus.contains(static_cast<double>(e.n), mu_near);
        }
        touched += any ? 1 : 0;
    }
    CHECK(fully >= 9);
    CHECK(touched >= 9);
    // Plausibility boxes never exceed belief boxes.
    CHECK(pair.plaus.n_lo >= pair.belief.n_lo);
    CHECK(pair.plaus.n_hi <= pair.belief.n_hi);
    CHECK(pair.plaus.mu_lo >= pair.belief.mu_lo);
    CHECK(pair.plaus.mu_hi <= pair.belief.mu_hi);

    // The straggler is the 10th multiplier; at level 0.9 it must be outside
    // the belief box.
    CHECK_FALSE(pair.belief.contains(44.0, 11.0));
}

TEST_CASE("unbounded draws force the belief box open") {
    std::vector<NpDrawSummary> draws;
    for (int i = 0; i < 6; ++i)
        draws.push_back(bounded_draw(14 + i % 2, 18 + i % 3, 3.0, 4.0 + 0.1 * i));
    for (int i = 0; i < 4; ++i) {
        NpDrawSummary d = bounded_draw(15, 210, 3.2, 4.1);
        d.unbounded = true;
        d.rep_censored = true;
        d.tail_mu_lo = 3.4;
        d.tail_mu_hi = 3.9;
        draws.push_back(d);
    }

    // Level above the bounded fraction: the belief box cannot close.
    const NpBoxPair open = np_boxes(draws, 0.7);
    CHECK(open.belief.unbounded);
    CHECK(open.belief.n_hi == std::numeric_limits<double>::infinity());
    CHECK(open.belief.contains(1e12, 0.5 * (open.belief.mu_lo + open.belief.mu_hi)));
    CHECK_FALSE(open.plaus.unbounded);

    // Level within the bounded fraction: the usual ranked construction.
    const NpBoxPair closed = np_boxes(draws, 0.5);
    CHECK_FALSE(closed.belief.unbounded);
    CHECK(std::isfinite(closed.belief.n_hi));

    // The unbounded draws still touch the plausibility box through their
    // tail interval.
    int touched = 0;
    for (const auto& d : draws) {
        bool any = false;
        for (const auto& e : d.segment) {
            const double mu_near = std::clamp(0.5 * (open.plaus.mu_lo + open.plaus.mu_hi),
                                              e.mu_lo, e.mu_hi);
            any = any || open.plaus.contains(static_cast<double>(e.n), mu_near);
        }
        if (d.unbounded) {
            const double mu_near = std::clamp(0.5 * (open.plaus.mu_lo + open.plaus.mu_hi),
                                              d.tail_mu_lo, d.tail_mu_hi);
            any = any || open.plaus.contains(static_cast<double>(d.n_last), mu_near);
        }
        touched += any ? 1 : 0;
    }
    CHECK(touched >= 7);

    CHECK_THROWS_AS((void)np_boxes({}, 0.9), std::invalid_argument);
    CHECK_THROWS_AS((void)np_boxes(draws, 1.0), std::invalid_argument);
}

TEST_CASE("box membership semantics") {
    NpBox b{10.0, 20.0, 2.0, 4.0, false};
    CHECK(b.contains(10.0, 2.0));
    CHECK(b.contains(20.0, 4.0));
    CHECK_FALSE(b.contains(9.9, 3.0));
    CHECK_FALSE(b.contains(20.1, 3.0));
    CHECK_FALSE(b.contains(15.0, 1.9));
    b.unbounded = true;
    CHECK(b.contains(1e9, 3.0));
    CHECK_FALSE(b.contains(1e9, 4.1));
}

} // TEST_SUITE
