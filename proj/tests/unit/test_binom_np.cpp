#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gfi/binom_np.hpp"
#include "gfi/rng.hpp"
#include "gfi/special.hpp"

using namespace gfi;

namespace {

std::vector<long long> simulate_counts(long long n, double p, int m, Rng& rng) {
    std::vector<long long> y(static_cast<std::size_t>(m), 0);
    for (auto& v : y) {
        long long c = 0;
        for (long long t = 0; t < n; ++t) c += (rng.uniform() <= p);
        v = c;
    }
    return y;
}

// Mu interval at one candidate n, straight from the per-observation bounds.
std::pair<double, double> direct_interval(const std::vector<long long>& y,
                                          const std::vector<double>& u, long long n) {
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto pb = p_bounds(y[i], n, u[i]);
        lo = std::max(lo, n * pb.lower);
        hi = std::min(hi, n * pb.upper);
    }
    return {lo, hi};
}

long long direct_n_min(const std::vector<long long>& y, const std::vector<double>& u,
                       long long cap) {
    long long first = 1;
    for (long long v : y) first = std::max(first, v);
    for (long long n = first; n <= cap; ++n) {
        const auto [lo, hi] = direct_interval(y, u, n);
        if (lo < hi) return n;
    }
    return -1;
}

bool box_condition(long long y, long long n, double p, double u) {
    return binom_cdf(n, p, y - 1) < u && u <= binom_cdf(n, p, y);
}

} // namespace

TEST_SUITE("binom_np") {

TEST_CASE("p bound validation") {
    CHECK_THROWS_AS((void)p_bounds(5, 3, 0.5), std::domain_error);
    CHECK_THROWS_AS((void)p_bounds(0, 0, 0.5), std::domain_error);
    CHECK_THROWS_AS((void)p_bounds(2, 6, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)p_bounds(2, 6, 1.0), std::invalid_argument);
}

TEST_CASE("p bounds invert the beta tails") {
    for (long long n : {6LL, 20LL, 81LL}) {
        for (long long y : {0LL, 1LL, n / 2, n}) {
            for (double u : {0.03, 0.4, 0.88}) {
                const auto pb = p_bounds(y, n, u);
                CHECK(pb.lower >= 0.0);
                CHECK(pb.upper <= 1.0);
                CHECK(pb.lower < pb.upper);
                if (y == 0) {
                    CHECK(pb.lower == 0.0);
                } else {
                    CHECK(reg_inc_beta(static_cast<double>(y), static_cast<double>(n - y + 1),
                                       pb.lower) == doctest::Approx(1.0 - u).epsilon(1e-8));
                }
                if (y == n) {
                    CHECK(pb.upper == 1.0);
                } else {
                    CHECK(reg_inc_beta(static_cast<double>(y + 1), static_cast<double>(n - y),
                                       pb.upper) == doctest::Approx(1.0 - u).epsilon(1e-8));
                }
            }
        }
    }
}

TEST_CASE("p bounds delimit exactly the uniforms that replay the count") {
    const long long y = 4, n = 12;
    for (double u : {0.11, 0.5, 0.93}) {
        const auto pb = p_bounds(y, n, u);
        for (int k = 1; k < 999; ++k) {
            const double p = k / 1000.0;
            if (std::abs(p - pb.lower) < 1e-7 || std::abs(p - pb.upper) < 1e-7) continue;
            const bool inside = pb.lower < p && p <= pb.upper;
            CHECK(inside == box_condition(y, n, p, u));
        }
    }
}

TEST_CASE("mean-scale bounds converge to their gamma limits") {
    const long long y = 7;
    const double u = 0.3;
    const double lim_lo = gamma_quantile(static_cast<double>(y), 1.0, 1.0 - u);
    const double lim_hi = gamma_quantile(static_cast<double>(y + 1), 1.0, 1.0 - u);

    // The scaled bounds approach the limits from below; the absolute gap
    // shrinks monotonically once n clears ten observations' worth.
    double prev_lo = std::numeric_limits<double>::infinity();
    double prev_hi = std::numeric_limits<double>::infinity();
    for (long long n : {70LL, 200LL, 1000LL, 10000LL, 200000LL, 1000000LL}) {
        const auto pb = p_bounds(y, n, u);
        const double gap_lo = std::abs(n * pb.lower - lim_lo);
        const double gap_hi = std::abs(n * pb.upper - lim_hi);
        CHECK(gap_lo <= prev_lo + 1e-12);
        CHECK(gap_hi <= prev_hi + 1e-12);
        prev_lo = gap_lo;
        prev_hi = gap_hi;
    }
    CHECK(prev_lo < 1e-3);
    CHECK(prev_hi < 1e-3);
}

TEST_CASE("single observation always extends to an unbounded tail") {
    NpSolveConfig cfg;
    cfg.eps2 = 1e-3;
    const auto set = solution_set({0.5}, {3}, cfg);
    REQUIRE(!set.entries.empty());
    CHECK(set.unbounded_tail);
    CHECK(set.entries.front().n == 3);
    for (std::size_t i = 1; i < set.entries.size(); ++i) {
        CHECK(set.entries[i].n == set.entries[i - 1].n + 1);
    }
    const auto& last = set.entries.back();
    CHECK(std::abs(last.mu_lo - gamma_quantile(3.0, 1.0, 0.5)) < cfg.eps2);
    CHECK(std::abs(last.mu_hi - gamma_quantile(4.0, 1.0, 0.5)) < cfg.eps2);
}

TEST_CASE("interior points of the solution set replay every count") {
    Rng rng(61);
    const std::vector<long long> y = {5, 7, 6, 4, 8};
    // Draw each uniform inside its observation's CDF box at a common
    // anchor (n = 12, p = 1/2) so the joint configuration is feasible.
    std::vector<double> u(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double flo = binom_cdf(12, 0.5, y[i] - 1);
        const double fhi = binom_cdf(12, 0.5, y[i]);
        u[i] = flo + (0.2 + 0.6 * rng.uniform()) * (fhi - flo);
    }
    NpSolveConfig cfg;
    cfg.eps2 = 0.01;
    const auto set = solution_set(u, y, cfg);
    REQUIRE(!set.entries.empty());
    for (const auto& e : set.entries) {
        CHECK(e.mu_lo < e.mu_hi);
        CHECK(e.n >= 8);
        const double mu = 0.5 * (e.mu_lo + e.mu_hi);
        const double p = mu / static_cast<double>(e.n);
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(box_condition(y[i], e.n, p, u[i]));
        }
    }
}

TEST_CASE("conflicting observations cut the ladder") {
    // One observation pushes mu high, another caps it low; past some n the
    // intersection dies and stays dead.
    const std::vector<long long> y = {5, 5};
    const std::vector<double> u = {0.985, 0.015};
    NpSolveConfig cfg;
    cfg.eps2 = 1e-3;
    const auto set = solution_set(u, y, cfg);
    CHECK_FALSE(set.unbounded_tail);
    if (!set.entries.empty()) {
        const long long next = set.entries.back().n + 1;
        const auto [lo, hi] = direct_interval(y, u, next);
        CHECK_FALSE(lo < hi);
    }
    // Limit interval of the high-u observation sits entirely below the
    // limit interval of the low-u observation, so the far tail is empty.
    const double cap = gamma_quantile(6.0, 1.0, 1.0 - u[0]);
    const double floor_lo = gamma_quantile(5.0, 1.0, 1.0 - u[1]);
    CHECK(cap < floor_lo);
}

TEST_CASE("engine state matches the standalone ladder") {
    Rng rng(62);
    const auto y = simulate_counts(15, 0.5, 12, rng);
    NpSamplerConfig cfg;
    cfg.eps2 = 0.02;
    cfg.seed = 3;
    const NpState init = init_state(y, cfg, rng);

    NpEngine engine(y, cfg);
    engine.set_u(init.u);
    const auto from_engine = engine.materialize();
    const auto direct = solution_set(init.u, y, NpSolveConfig{cfg.eps2, 2000000});
    REQUIRE(!from_engine.entries.empty());
    REQUIRE(from_engine.entries.size() == direct.entries.size());
    CHECK(from_engine.unbounded_tail == direct.unbounded_tail);
    for (std::size_t i = 0; i < direct.entries.size(); ++i) {
        CHECK(from_engine.entries[i].n == direct.entries[i].n);
        CHECK(from_engine.entries[i].mu_lo ==
              doctest::Approx(direct.entries[i].mu_lo).epsilon(1e-9));
        CHECK(from_engine.entries[i].mu_hi ==
              doctest::Approx(direct.entries[i].mu_hi).epsilon(1e-9));
    }
    CHECK(engine.n_min() == direct.entries.front().n);
}

TEST_CASE("initial state is always feasible") {
    Rng rng(63);
    for (int rep = 0; rep < 10; ++rep) {
        const auto y = simulate_counts(15, 0.1 + 0.08 * rep, 30, rng);
        if (*std::max_element(y.begin(), y.end()) == 0) continue;
        NpSamplerConfig cfg;
        cfg.eps2 = 0.05;
        const NpState st = init_state(y, cfg, rng);
        REQUIRE(st.u.size() == y.size());
        for (double v : st.u) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
        CHECK(direct_n_min(y, st.u, 4000) > 0);
    }
}

TEST_CASE("all-equal counts fall back to twice the maximum") {
    Rng rng(64);
    const std::vector<long long> y(8, 6);
    NpSamplerConfig cfg;
    cfg.eps2 = 0.01;
    const NpState st = init_state(y, cfg, rng);
    // Moment estimator degenerates (zero variance): trial count 12, matching
    // probability 1/2, so mu = 6 must be admissible at n = 12.
    const auto [lo, hi] = direct_interval(y, st.u, 12);
    CHECK(lo < 6.0);
    CHECK(6.0 <= hi);
}

TEST_CASE("degenerate all-zero data is rejected") {
    Rng rng(65);
    NpSamplerConfig cfg;
    CHECK_THROWS_AS((void)init_state({0, 0, 0}, cfg, rng), std::runtime_error);
}

TEST_CASE("gibbs scans preserve feasibility") {
    Rng rng(66);
    const auto y = simulate_counts(15, 0.5, 25, rng);
    const long long ymax = *std::max_element(y.begin(), y.end());
    NpSamplerConfig cfg;
    cfg.eps2 = 0.05;
    NpEngine engine(y, cfg);
    engine.set_u(init_state(y, cfg, rng).u);

    for (int scan = 0; scan < 300; ++scan) {
        engine.gibbs_scan(rng);
        REQUIRE(engine.n_min() >= ymax);
        for (double v : engine.u()) {
            REQUIRE(v > 0.0);
            REQUIRE(v < 1.0);
        }
        if (scan % 50 == 0) {
            CHECK(direct_n_min(y, engine.u(), 100000) == engine.n_min());
        }
    }
    CHECK(engine.gibbs_fallbacks() == 0);
}

TEST_CASE("metropolis decisions match an independent replay") {
    Rng data_rng(67);
    const auto y = simulate_counts(12, 0.5, 10, data_rng);
    NpSamplerConfig cfg;
    cfg.eps2 = 0.02;
    cfg.mu_proposal_sd = 1.0;
    NpEngine engine(y, cfg);
    engine.set_u(init_state(y, cfg, data_rng).u);

    long long first_n = 1;
    for (long long v : y) first_n = std::max(first_n, v);

    int mu_accepts = 0, n_accepts = 0, checked = 0;
    for (int step = 0; step < 240; ++step) {
        const std::vector<double> cur = engine.u();
        const bool mu_move = (step % 2 == 0);
        Rng engine_rng(9000 + step);
        Rng replay(9000 + step);

        // Independent replay of the proposal and its acceptance ratio from
        // public primitives only.
        const long long a = engine.n_min();
        const auto [ia_lo, ia_hi] = direct_interval(y, cur, a);
        REQUIRE(ia_lo < ia_hi);

        bool expect_accept = false;
        std::vector<double> u_prop(y.size());
        double mu_star = 0.0, mu_prop = 0.0;
        long long n_prop = a;
        bool viable = true;

        mu_star = replay.uniform(ia_lo, ia_hi);
        if (mu_move) {
            mu_prop = mu_star + cfg.mu_proposal_sd * replay.normal();
            n_prop = a;
            if (!(mu_prop > 0.0) || !(mu_prop < static_cast<double>(a))) viable = false;
        } else {
            n_prop = a + (replay.uniform() <= 0.5 ? 1 : -1);
            mu_prop = mu_star;
            if (n_prop < first_n || !(mu_star < static_cast<double>(n_prop))) viable = false;
        }

        if (viable) {
            const double p_prop = mu_prop / static_cast<double>(n_prop);
            double log_w_fwd = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double flo = binom_cdf(n_prop, p_prop, y[i] - 1);
                const double fhi = binom_cdf(n_prop, p_prop, y[i]);
                if (!(fhi > flo)) {
                    viable = false;
                    break;
                }
                u_prop[i] = replay.uniform(flo, fhi);
                log_w_fwd += std::log(fhi - flo);
            }
            if (viable) {
                const long long b = direct_n_min(y, u_prop, n_prop);
                if (b < 0 || (!mu_move && std::llabs(b - a) != 1)) {
                    viable = false;
                } else {
                    const auto [ib_lo, ib_hi] = direct_interval(y, u_prop, b);
                    const double back_mu = mu_move ? mu_prop : mu_star;
                    if (!(ib_lo < ib_hi) || !(back_mu > ib_lo && back_mu <= ib_hi)) {
                        viable = false;
                    } else {
                        const long long rev_n = mu_move ? b : a;
                        double rev_mu_ref = mu_star;
                        if (mu_move) {
                            const auto [cb_lo, cb_hi] = direct_interval(y, cur, b);
                            if (!(cb_lo < cb_hi) ||
                                !(mu_star > cb_lo && mu_star <= cb_hi)) {
                                viable = false;
                            }
                            rev_mu_ref = mu_star;
                        }
                        if (viable) {
                            const double p_rev = rev_mu_ref / static_cast<double>(rev_n);
                            double log_w_rev = 0.0;
                            if (!(p_rev > 0.0 && p_rev < 1.0)) viable = false;
                            for (std::size_t i = 0; viable && i < y.size(); ++i) {
                                const double w = binom_cdf(rev_n, p_rev, y[i]) -
                                                 binom_cdf(rev_n, p_rev, y[i] - 1);
                                if (!(w > 0.0)) {
                                    viable = false;
                                    break;
                                }
                                log_w_rev += std::log(w);
                            }
                            if (viable) {
                                const double log_ratio = std::log(ia_hi - ia_lo) + log_w_fwd -
                                                         std::log(ib_hi - ib_lo) - log_w_rev;
                                expect_accept = std::log(replay.uniform()) <= log_ratio;
                            }
                        }
                    }
                }
            }
        }

        const bool got_accept =
            mu_move ? engine.mh_step_mu(engine_rng) : engine.mh_step_n(engine_rng);
        CHECK(got_accept == expect_accept);
        ++checked;
        if (got_accept) {
            (mu_move ? mu_accepts : n_accepts) += 1;
            const auto& eu = engine.u();
            for (std::size_t i = 0; i < eu.size(); ++i) {
                CHECK(std::abs(eu[i] - u_prop[i]) < 1e-6);
            }
        } else {
            CHECK(engine.u() == cur);
        }

        Rng mix(100000 + step);
        engine.gibbs_scan(mix);
    }
    CHECK(checked == 240);
    CHECK(mu_accepts > 0);
    CHECK(n_accepts > 0);
}

TEST_CASE("draw summaries are coherent") {
    Rng rng(68);
    const auto y = simulate_counts(15, 0.2, 30, rng);
    NpSamplerConfig cfg;
    cfg.eps2 = 0.05;
    NpEngine engine(y, cfg);
    engine.set_u(init_state(y, cfg, rng).u);
    for (int k = 0; k < 40; ++k) engine.gibbs_scan(rng);

    for (int k = 0; k < 25; ++k) {
        engine.gibbs_scan(rng);
        const NpDrawSummary s = engine.summarize(rng);
        CHECK(s.n_min == engine.n_min());
        CHECK(s.n_last >= s.n_min);
        REQUIRE(!s.segment.empty());
        CHECK(s.segment.front().n == s.n_min);
        CHECK(s.segment.front().mu_lo == s.mu_lo_at_min);
        CHECK(s.segment.front().mu_hi == s.mu_hi_at_min);
        CHECK(s.mu_min <= s.mu_lo_at_min + 1e-12);
        CHECK(s.mu_max >= s.mu_hi_at_min - 1e-12);
        CHECK(s.unbounded == engine.unbounded());
        if (s.unbounded) {
            CHECK(s.tail_mu_lo < s.tail_mu_hi);
        } else {
            CHECK_FALSE(s.rep_censored);
        }
        if (!s.rep_censored) {
            CHECK(s.rep_n >= s.n_min);
            CHECK(s.rep_n <= s.n_last);
            CHECK(s.rep_mu >= s.mu_min - 1e-12);
            CHECK(s.rep_mu <= s.mu_max + 1e-12);
        }
    }
}

TEST_CASE("two independent starts agree on the stationary minimum-n law") {
    Rng rng(69);
    const std::vector<long long> y = {2, 3};
    NpSamplerConfig cfg;
    cfg.eps2 = 0.05;
    cfg.mu_proposal_sd = 1.5;

    auto run_freqs = [&](std::uint64_t seed, const std::vector<double>& start) {
        Rng local(seed);
        NpEngine engine(y, cfg);
        engine.set_u(start);
        std::vector<double> freq(6, 0.0);
        const int iters = 4000;
        for (int k = 0; k < iters; ++k) {
            engine.gibbs_scan(local);
            engine.mh_step_mu(local);
            engine.mh_step_n(local);
            const long long bucket = std::min<long long>(engine.n_min() - 3, 5);
            freq[static_cast<std::size_t>(bucket)] += 1.0 / iters;
        }
        return freq;
    };

    const auto f1 = run_freqs(1001, init_state(y, cfg, rng).u);
    // Second start: box midpoints of a deliberately different configuration
    // (n = 8, p = 0.4), far from the moment-based initial guess.
    std::vector<double> other = {0.2, 0.5};
    REQUIRE(direct_n_min(y, other, 1000) > 0);
    const auto f2 = run_freqs(2002, other);
    double tv = 0.0;
    for (std::size_t k = 0; k < f1.size(); ++k) tv += std::abs(f1[k] - f2[k]);
    CHECK(tv / 2.0 < 0.15);
}

TEST_CASE("sampler runs validate their configuration") {
    const std::vector<long long> y = {3, 4};
    NpSamplerConfig cfg;
    cfg.iterations = 100;
    cfg.burn_in = 100;
    CHECK_THROWS_AS((void)run_np_summaries(y, cfg), std::invalid_argument);
    cfg.burn_in = 10;
    cfg.thin = 0;
    CHECK_THROWS_AS((void)run_np_summaries(y, cfg), std::invalid_argument);
}

TEST_CASE("recorded solution sets are nonempty and reproducible") {
    Rng rng(70);
    const auto y = simulate_counts(15, 0.1, 30, rng);
    NpSamplerConfig cfg;
    cfg.eps2 = 0.05;
    cfg.iterations = 300;
    cfg.burn_in = 100;
    cfg.thin = 2;
    cfg.seed = 11;

    const NpRun run = run_np_sampler(y, cfg);
    REQUIRE(run.sets.size() == 100);
    int unbounded = 0;
    for (const auto& s : run.sets) {
        REQUIRE(!s.entries.empty());
        unbounded += s.unbounded_tail ? 1 : 0;
        for (std::size_t i = 1; i < s.entries.size(); ++i) {
            CHECK(s.entries[i].n == s.entries[i - 1].n + 1);
            CHECK(s.entries[i].mu_lo < s.entries[i].mu_hi);
        }
    }
    // Poisson-regime data: a visible fraction of draws run off to infinity.
    CHECK(unbounded > 0);

    const NpRun again = run_np_sampler(y, cfg);
    REQUIRE(again.sets.size() == run.sets.size());
    CHECK(again.mu_acceptance == run.mu_acceptance);
    CHECK(again.sets.back().entries.front().mu_lo ==
          run.sets.back().entries.front().mu_lo);

    // The summary runner spends extra random words per recorded draw on the
    // representative-point coins, so its chain agrees with the set runner
    // only up to the first record; after that compare it with itself.
    const NpSummaryRun sums = run_np_summaries(y, cfg);
    REQUIRE(sums.draws.size() == run.sets.size());
    CHECK(sums.draws.front().n_min == run.sets.front().entries.front().n);
    CHECK(sums.draws.front().unbounded == run.sets.front().unbounded_tail);
    for (const auto& d : sums.draws) {
        CHECK(d.n_min >= *std::max_element(y.begin(), y.end()));
        CHECK(d.mu_min < d.mu_max);
    }
    const NpSummaryRun sums2 = run_np_summaries(y, cfg);
    REQUIRE(sums2.draws.size() == sums.draws.size());
    for (std::size_t k = 0; k < sums.draws.size(); ++k) {
        CHECK(sums2.draws[k].n_min == sums.draws[k].n_min);
        CHECK(sums2.draws[k].unbounded == sums.draws[k].unbounded);
        CHECK(sums2.draws[k].rep_mu == sums.draws[k].rep_mu);
    }
}

} // TEST_SUITE
