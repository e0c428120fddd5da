#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gfi/rng.hpp"
#include "gfi/special.hpp"

using namespace gfi;

TEST_SUITE("rng") {

TEST_CASE("same seed, same stream; different seed, different stream") {
    Rng a(42), b(42), c(43);
    bool all_equal = true;
    bool any_equal_c = false;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_equal_c = any_equal_c || (va == c.next_u64());
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_c);

    Rng d(7);
    d.reseed(42);
    Rng e(42);
    CHECK(d.next_u64() == e.next_u64());
}

TEST_CASE("uniform stays inside (0, 1]") {
    Rng rng(1);
    double lo = 2.0, hi = -1.0;
    for (int i = 0; i < 200000; ++i) {
        const double u = rng.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo > 0.0);
    CHECK(hi <= 1.0);
    CHECK(lo < 1e-4);
    CHECK(hi > 1.0 - 1e-4);
}

TEST_CASE("ranged uniform and uniform_int respect bounds") {
    Rng rng(2);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform(-3.0, 2.0);
        CHECK(u > -3.0);
        CHECK(u <= 2.0);
    }
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 70000; ++i) ++hits[rng.uniform_int(7)];
    for (int k = 0; k < 7; ++k) {
        CHECK(hits[k] > 9000);
        CHECK(hits[k] < 11000);
    }
}

TEST_CASE("normal consumes exactly two words per draw") {
    Rng a(9), b(9);
    (void)a.normal();
    (void)b.uniform();
    (void)b.uniform();
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("normal moments") {
    Rng rng(3);
    const int n = 400000;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
        s3 += z * z * z;
    }
    CHECK(std::abs(s1 / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(s3 / n) < 0.03);
}

TEST_CASE("gamma moments across the shape boundary") {
    Rng rng(4);
    for (double shape : {0.4, 1.0, 2.5, 9.0}) {
        const double rate = 1.5;
        const int n = 200000;
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double g = rng.gamma(shape, rate);
            CHECK(g > 0.0);
            s1 += g;
            s2 += g * g;
        }
        const double mean = s1 / n;
        const double var = s2 / n - mean * mean;
        CHECK(mean == doctest::Approx(shape / rate).epsilon(0.02));
        CHECK(var == doctest::Approx(shape / (rate * rate)).epsilon(0.05));
    }
}

TEST_CASE("gamma draws follow the gamma law, not just its moments") {
    Rng rng(5);
    const double shape = 3.0, rate = 2.0;
    const int n = 20000;
    // Kolmogorov-Smirnov against the exact CDF, far beyond the 1% critical
    // value 1.63 / sqrt(n).
    std::vector<double> pit(n);
    for (int i = 0; i < n; ++i) pit[i] = reg_inc_gamma(shape, rate * rng.gamma(shape, rate));
    std::sort(pit.begin(), pit.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        ks = std::max(ks, std::abs(pit[i] - (i + 0.5) / n));
    }
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("beta draws match the beta law") {
    Rng rng(6);
    const double a = 2.0, b = 3.0;
    const int n = 20000;
    std::vector<double> pit(n);
    for (int i = 0; i < n; ++i) pit[i] = reg_inc_beta(a, b, sample_beta(a, b, rng));
    std::sort(pit.begin(), pit.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        ks = std::max(ks, std::abs(pit[i] - (i + 0.5) / n));
    }
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));
}

} // TEST_SUITE
