#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gfi/binom_n.hpp"
#include "gfi/rng.hpp"
#include "gfi/special.hpp"

using namespace gfi;

namespace {

// Brute-force single-observation masses: one latent uniform partitions (0, 1]
// by the CDF staircase, so each candidate interval's mass is the measure of
// uniforms whose viable-n set is exactly that interval (truncated at the
// range's right edge).
struct EnumeratedMasses {
    std::vector<double> renorm; // same layout as MassAssignment.mass
    double empty = 0.0;
};

EnumeratedMasses enumerate_single_obs(long long y, double p, const IntegerInterval& range) {
    const long long len = range.length();
    auto fy = [&](long long n) { return binom_cdf(n, p, y); };
    auto fym1 = [&](long long n) { return binom_cdf(n, p, y - 1); };

    std::vector<double> raw(static_cast<std::size_t>(len * (len + 1) / 2), 0.0);
    MassAssignment layout;
    layout.range = range;
    double total = 0.0;
    for (long long a = range.lo; a <= range.hi; ++a) {
        const double hi_a = (a == range.lo) ? 1.0 : fym1(a - 1);
        for (long long b = a; b <= range.hi; ++b) {
            const double hi_b = fy(b);
            const double lo_a = fym1(a);
            const double lo_b = (b == range.hi) ? 0.0 : fy(b + 1);
            const double mass = std::max(0.0, std::min(hi_a, hi_b) - std::max(lo_a, lo_b));
            raw[layout.interval_index(a, b)] = mass;
            total += mass;
        }
    }
    EnumeratedMasses out;
    out.empty = 1.0 - total;
    out.renorm.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out.renorm[i] = raw[i] / total;
    return out;
}

std::vector<long long> constant_counts(long long value, int m) {
    return std::vector<long long>(static_cast<std::size_t>(m), value);
}

} // namespace

TEST_SUITE("binom_n") {

TEST_CASE("commonality hand values and likelihood identity") {
    CHECK(commonality({1, 1}, {1}, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(commonality({1, 2}, {1}, 0.5) == doctest::Approx(0.25).epsilon(1e-12));
    for (long long n : {1LL, 4LL, 9LL}) {
        CHECK(commonality({n, n}, {0}, 0.5) ==
              doctest::Approx(std::pow(2.0, -static_cast<double>(n))).epsilon(1e-12));
    }
    // Singletons reproduce the likelihood product exactly.
    const std::vector<long long> y = {2, 3, 1};
    for (long long n : {3LL, 5LL, 11LL}) {
        double want = 0.0;
        for (long long yi : y) want += binom_log_pmf(n, 0.4, yi);
        CHECK(commonality({n, n}, y, 0.4) == doctest::Approx(std::exp(want)).epsilon(1e-12));
    }
}

TEST_CASE("commonality shrinks as the set grows") {
    Rng rng(51);
    const std::vector<long long> y = {4, 6, 5};
    for (int rep = 0; rep < 50; ++rep) {
        const long long a = 6 + static_cast<long long>(rng.uniform_int(10));
        const long long b = a + static_cast<long long>(rng.uniform_int(8));
        const long long b2 = b + 1 + static_cast<long long>(rng.uniform_int(5));
        const double inner = commonality({a, b}, y, 0.45);
        CHECK(commonality({a, b2}, y, 0.45) <= inner + 1e-15);
        if (a > 6) {
            CHECK(commonality({a - 1, b}, y, 0.45) <= inner + 1e-15);
        }
    }
}

TEST_CASE("candidate range collapses under near-certain success") {
    const auto range = candidate_range(constant_counts(10, 100), 0.99, 1e-8);
    CHECK(range.lo == 10);
    CHECK(range.hi == 10);
}

TEST_CASE("candidate range starts at the data maximum and is eps-monotone") {
    const std::vector<long long> y = {3, 7, 5, 6};
    const auto tight = candidate_range(y, 0.5, 1e-4);
    const auto loose = candidate_range(y, 0.5, 1e-10);
    CHECK(tight.lo == 7);
    CHECK(loose.lo == 7);
    CHECK(loose.hi >= tight.hi);

    // All-zero data: the scan starts at zero trials and stays finite.
    const auto zero = candidate_range({0}, 0.5, 0.5);
    CHECK(zero.lo == 0);
    CHECK(zero.length() >= 1);
}

TEST_CASE("candidate range respects the ratio cutoff at its edge") {
    const std::vector<long long> y = {1};
    const double p = 0.5, eps1 = 1e-8;
    const auto range = candidate_range(y, p, eps1);
    double best = 0.0;
    for (long long n = range.lo; n <= range.hi; ++n) {
        best = std::max(best, commonality({n, n}, y, p));
    }
    const double edge = commonality({range.hi, range.hi}, y, p);
    const double beyond = commonality({range.hi + 1, range.hi + 1}, y, p);
    CHECK(edge / best > eps1);
    CHECK(beyond / std::max(best, beyond) <= eps1);
}

TEST_CASE("mass recursion reproduces the textbook two-candidate case") {
    const IntegerInterval range{1, 2};
    const auto masses = ds_masses(range, {1}, 0.5);
    REQUIRE(masses.mass.size() == 3);
    CHECK(masses.empty_mass == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(masses.mass[masses.interval_index(1, 1)] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(masses.mass[masses.interval_index(1, 2)] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(masses.mass[masses.interval_index(2, 2)] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("single-observation masses match direct enumeration") {
    for (long long y : {1LL, 3LL, 7LL}) {
        for (double p : {0.15, 0.5, 0.85}) {
            const auto range = candidate_range({y}, p, 1e-6);
            const auto masses = ds_masses(range, {y}, p);
            const auto oracle = enumerate_single_obs(y, p, range);
            REQUIRE(masses.mass.size() == oracle.renorm.size());
            double sum = 0.0;
            for (std::size_t i = 0; i < masses.mass.size(); ++i) {
                CHECK(masses.mass[i] >= 0.0);
                CHECK(masses.mass[i] == doctest::Approx(oracle.renorm[i]).epsilon(1e-10));
                sum += masses.mass[i];
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(masses.empty_mass == doctest::Approx(oracle.empty).epsilon(1e-10));
        }
    }
}

TEST_CASE("masses sum to one for pooled data") {
    Rng rng(52);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<long long> y(5);
        for (auto& v : y) v = 1 + static_cast<long long>(rng.uniform_int(9));
        const double p = 0.2 + 0.6 * rng.uniform();
        const auto range = candidate_range(y, p, 1e-8);
        const auto masses = ds_masses(range, y, p);
        double sum = 0.0;
        for (double m : masses.mass) {
            CHECK(m >= 0.0);
            sum += m;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("endpoint pmf of the two-candidate case") {
    const auto masses = ds_masses({1, 2}, {1}, 0.5);
    const auto pmf = endpoint_pmf(masses);
    REQUIRE(pmf.size() == 2);
    CHECK(pmf[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pmf[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("interval draws resolve to endpoints") {
    MassAssignment masses;
    masses.range = {3, 7};
    masses.mass.assign(static_cast<std::size_t>(5 * 6 / 2), 0.0);
    masses.mass[masses.interval_index(3, 7)] = 1.0;

    Rng rng(53);
    const auto draws = sample_n(masses, 100000, rng);
    long long lo_hits = 0, hi_hits = 0;
    for (long long d : draws) {
        REQUIRE((d == 3 || d == 7));
        (d == 3 ? lo_hits : hi_hits) += 1;
    }
    // Fair coin: three sigmas around one half.
    const double half_sd = 3.0 * std::sqrt(0.25 / 100000.0);
    CHECK(std::abs(lo_hits / 100000.0 - 0.5) < half_sd);
    CHECK(std::abs(hi_hits / 100000.0 - 0.5) < half_sd);
}

TEST_CASE("interval selection follows the masses") {
    MassAssignment masses;
    masses.range = {1, 2};
    masses.mass.assign(3, 0.0);
    masses.mass[masses.interval_index(1, 1)] = 1.0 / 3;
    masses.mass[masses.interval_index(2, 2)] = 2.0 / 3;

    Rng rng(54);
    const auto draws = sample_n(masses, 90000, rng);
    long long ones = 0;
    for (long long d : draws) ones += (d == 1);
    const double sd = std::sqrt((1.0 / 3) * (2.0 / 3) / 90000.0);
    CHECK(std::abs(ones / 90000.0 - 1.0 / 3) < 3.0 * sd);
}

TEST_CASE("flat-prior baseline pmf") {
    // Geometric tail for all-failure data.
    const IntegerInterval range{0, 12};
    const auto pmf = bayes_posterior_n({0}, 0.5, range);
    REQUIRE(pmf.size() == 13);
    double norm = 0.0;
    for (int k = 0; k <= 12; ++k) norm += std::pow(2.0, -k);
    for (int k = 0; k <= 12; ++k) {
        CHECK(pmf[k] == doctest::Approx(std::pow(2.0, -k) / norm).epsilon(1e-10));
    }

    // Mode sits at the likelihood argmax.
    const std::vector<long long> y = {4, 5, 6};
    const auto range2 = candidate_range(y, 0.5, 1e-8);
    const auto pmf2 = bayes_posterior_n(y, 0.5, range2);
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < pmf2.size(); ++i)
        if (pmf2[i] > pmf2[argmax]) argmax = i;
    double best = -1e300;
    long long best_n = range2.lo;
    for (long long n = range2.lo; n <= range2.hi; ++n) {
        double ll = 0.0;
        for (long long yi : y) ll += binom_log_pmf(n, 0.5, yi);
        if (ll > best) {
            best = ll;
            best_n = n;
        }
    }
    CHECK(range2.lo + static_cast<long long>(argmax) == best_n);
}

TEST_CASE("upper quantile sets") {
    CHECK(upper_interval(std::vector<double>{1.0}, 5, 0.99) == IntegerInterval{5, 5});

    std::vector<double> uniform(100, 0.01);
    CHECK(upper_interval(uniform, 1, 0.95) == IntegerInterval{1, 95});
    CHECK(upper_interval(uniform, 1, 0.951) == IntegerInterval{1, 96});

    std::vector<long long> draws;
    for (long long v = 1; v <= 100; ++v) draws.push_back(v);
    CHECK(upper_interval(draws, 0.95) == IntegerInterval{1, 95});
}

TEST_CASE("fiducial pmf approaches the flat-prior posterior when mass is singleton-heavy") {
    Rng rng(55);
    std::vector<long long> y(100);
    for (auto& v : y) {
        long long c = 0;
        for (int t = 0; t < 10; ++t) c += (rng.uniform() <= 0.9);
        v = c;
    }
    const auto range = candidate_range(y, 0.9, 1e-8);
    const auto masses = ds_masses(range, y, 0.9);
    const auto fid = endpoint_pmf(masses);
    const auto bay = bayes_posterior_n(y, 0.9, range);
    REQUIRE(fid.size() == bay.size());
    double tv = 0.0;
    for (std::size_t i = 0; i < fid.size(); ++i) tv += std::abs(fid[i] - bay[i]);
    CHECK(tv / 2.0 < 0.02);
}

} // TEST_SUITE
