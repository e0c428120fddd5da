#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gfi/rng.hpp"

namespace gfi {

// Joint fiducial inference for binomial counts when both the number of
// trials n and the success probability p are unknown. Each observation y_i
// carries a latent uniform u_i; for a candidate n the admissible success
// probabilities form the interval
//   ( G^{-1}_{y, n-y+1}(1 - u), G^{-1}_{y+1, n-y}(1 - u) ]
// (G the regularized incomplete beta CDF), rescaled by n to the mean scale
// mu = n p. The joint solution set is the family of those mu intervals,
// intersected across observations, over all candidate n; it may extend to
// unbounded n, where the intervals converge to gamma-quantile limits.

struct PBounds {
    double lower = 0.0;  // 0 when y = 0
    double upper = 1.0;  // 1 when y = n
};

// Per-observation bounds on p at a given n; requires 0 <= y <= n, n >= 1,
// u in (0, 1).
PBounds p_bounds(long long y, long long n, double u);

struct NpSetEntry {
    long long n = 0;
    double mu_lo = 0.0;  // open lower endpoint, mean scale
    double mu_hi = 0.0;  // closed upper endpoint, mean scale
};

struct NpSolutionSet {
    // Consecutive candidate n with a nonempty common mu interval. When
    // unbounded_tail is set the ladder was cut once every observation's
    // interval sits within eps2 of its gamma limit; the set itself
    // continues for all larger n.
    std::vector<NpSetEntry> entries;
    bool unbounded_tail = false;
};

struct NpSolveConfig {
    double eps2 = 1e-3;             // gamma-limit cut tolerance, mean scale
    long long max_candidates = 2000000;
};

// Faithful ladder of the joint solution set for fixed latent uniforms.
// Cost grows with the cut point (roughly max(y)^2 / eps2 candidates for
// count-like data), so wide ladders should use a coarser eps2.
NpSolutionSet solution_set(const std::vector<double>& u, const std::vector<long long>& y,
                           const NpSolveConfig& cfg);

struct NpSamplerConfig {
    double eps2 = 1e-3;
    double mu_proposal_sd = 0.0;    // 0 picks 0.5 * sqrt(mean(y))
    int iterations = 5000;          // total, including burn-in
    int burn_in = 1000;
    int thin = 1;                   // keep every thin-th post burn-in state
    std::uint64_t seed = 1;
};

// Latent state of the sampler: one uniform per observation. The associated
// solution set is always nonempty.
struct NpState {
    std::vector<double> u;
};

// Compact description of one recorded solution set, sufficient for region
// construction: the exact materialized rungs, the tail status, overall mu
// extents (tail side within eps2), and one representative point formed by
// picking the min or max rung and the low or high end of its interval with
// fair coins. Unbounded draws censor the representative rung at the cut.
struct NpDrawSummary {
    long long n_min = 0;
    double mu_lo_at_min = 0.0;
    double mu_hi_at_min = 0.0;
    bool unbounded = false;
    long long n_last = 0;           // last rung: termination - 1, or the cut
    double mu_min = 0.0;
    double mu_max = 0.0;
    double tail_mu_lo = 0.0;        // gamma-limit interval (unbounded only)
    double tail_mu_hi = 0.0;
    long long rep_n = 0;
    double rep_mu = 0.0;
    bool rep_censored = false;
    std::vector<NpSetEntry> segment; // exact rungs kept for region math
};

// Incremental sampler over the latent uniforms. Observations sharing a
// count are resampled as one block from their exact joint conditional
// (uniform over the feasible region), via rejection from a covering union
// of per-rung windows; two Metropolis moves translate the whole
// configuration in mu and shift the smallest feasible n by one.
class NpEngine {
public:
    NpEngine(std::vector<long long> y, NpSamplerConfig cfg);

    void set_u(std::vector<double> u);
    const std::vector<double>& u() const { return u_; }

    void gibbs_scan(Rng& rng);
    bool mh_step_mu(Rng& rng);
    bool mh_step_n(Rng& rng);

    long long n_min() const { return n_min_; }
    bool unbounded() const { return unbounded_; }
    NpDrawSummary summarize(Rng& rng) const;
    NpSolutionSet materialize() const;

    long long gibbs_fallbacks() const { return gibbs_fallbacks_; }

private:
    struct Group {
        long long y = 0;
        std::vector<int> members;
        double u_min = 0.0;
        double u_max = 0.0;
        // mu-scale interval endpoints per rung t (n = first_n + t):
        // lo at u_min (largest lower bound in the group), hi at u_max
        // (smallest upper bound).
        std::vector<double> lo;
        std::vector<double> hi;
        double lo_inf = 0.0;  // gamma-quantile limits of the same extremes
        double hi_inf = 0.0;
    };

    std::vector<long long> y_;
    NpSamplerConfig cfg_;
    long long first_n_ = 1;         // max(max y, 1)
    long long mono_n_ = 1;          // 10 * max y: monotone regime threshold
    std::vector<double> u_;
    std::vector<Group> groups_;
    long long live_len_ = 0;        // materialized rungs per group
    long long n_min_ = 0;
    long long term_n_ = -1;         // first empty rung after n_min (-1: none found)
    bool unbounded_ = false;
    long long gibbs_fallbacks_ = 0;

    void refresh_extremes(Group& g) const;
    void rebuild_group(Group& g) const;
    void rebuild_all();
    void classify();
    void extend_live();
    double group_lo_at(const Group& g, long long n, double warm) const;
    double group_hi_at(const Group& g, long long n, double warm) const;
    std::pair<double, double> rung_interval(long long t) const;
    bool rung_feasible(long long t) const;
    long long gamma_cut() const;

    struct Probe;
    friend struct Probe;
};

struct NpRun {
    std::vector<NpSolutionSet> sets;
    double mu_acceptance = 0.0;
    double n_acceptance = 0.0;
    long long gibbs_fallbacks = 0;
};

struct NpSummaryRun {
    std::vector<NpDrawSummary> draws;
    double mu_acceptance = 0.0;
    double n_acceptance = 0.0;
    long long gibbs_fallbacks = 0;
};

// Starting state: a method-of-moments trial count (clamped to
// [max(y), 10 max(y)], falling back to 2 max(y) when the moments disagree),
// its matching p, and per-observation uniforms at the midpoints of their
// probability-integral boxes. Throws when all counts are zero.
NpState init_state(const std::vector<long long>& y, const NpSamplerConfig& cfg, Rng& rng);

// One full sweep of the block conditional updates over duplicate-count
// groups. The state is modified in place and stays feasible.
void gibbs_scan(NpState& state, const std::vector<long long>& y,
                const NpSamplerConfig& cfg, Rng& rng);

// Metropolis translation of the whole configuration along mu, anchored at
// the smallest feasible rung. Returns whether the proposal was accepted.
bool mh_step_mu(NpState& state, const std::vector<long long>& y,
                const NpSamplerConfig& cfg, Rng& rng);

// Metropolis shift of the smallest feasible rung by one. Returns whether
// the proposal was accepted.
bool mh_step_n(NpState& state, const std::vector<long long>& y,
               const NpSamplerConfig& cfg, Rng& rng);

// Full sampler: init, iterate (gibbs scan + both Metropolis moves), record
// post burn-in states. run_np_sampler materializes each recorded state's
// full ladder; run_np_summaries keeps the compact form.
NpRun run_np_sampler(const std::vector<long long>& y, const NpSamplerConfig& cfg);
NpSummaryRun run_np_summaries(const std::vector<long long>& y, const NpSamplerConfig& cfg);

} // namespace gfi
