#pragma once

#include <cstdint>
#include <vector>

#include "gfi/rng.hpp"

namespace gfi {

// Fiducial machinery for the number of trials n of binomial counts with a
// known success probability. The fiducial object is a random integer
// interval; mass is assigned to candidate intervals by Moebius inversion of
// the interval commonality and then renormalized over nonempty intervals.

struct IntegerInterval {
    long long lo = 0;
    long long hi = 0;

    long long length() const { return hi - lo + 1; }
    bool operator==(const IntegerInterval&) const = default;
};

struct MassAssignment {
    IntegerInterval range;            // candidate range the masses live on
    // mass[idx(a, b)] over subintervals [a, b] of range, renormalized so
    // that the masses of nonempty intervals sum to one. Index layout is
    // row-major in (a - range.lo) with b ascending: see interval_index.
    std::vector<double> mass;
    double empty_mass = 0.0;          // deficit 1 - sum(raw masses), before renormalizing

    std::size_t interval_index(long long a, long long b) const;
};

// Probability that every n in s stays viable across all observations:
// prod_i max(0, F_{max s, p}(y_i) - F_{min s, p}(y_i - 1)).
double commonality(const IntegerInterval& s, const std::vector<long long>& y, double p);

// Contiguous candidate range starting at max(y): n is scanned upward and
// kept while the ratio of its singleton commonality to the running maximum
// (including the candidate itself) stays at least eps1. Throws when the
// scan exceeds a hard cap of 1,000,000 candidates.
IntegerInterval candidate_range(const std::vector<long long>& y, double p, double eps1);

// Interval masses on the candidate range: the full range receives its
// commonality, shorter intervals receive their commonality minus the mass
// already standing on strict superintervals, clamped at zero; the deficit
// goes to the empty set and the rest is renormalized.
MassAssignment ds_masses(const IntegerInterval& range, const std::vector<long long>& y, double p);

// pmf over the range implied by resolving each interval to one of its two
// endpoints with equal probability.
std::vector<double> endpoint_pmf(const MassAssignment& masses);

// Draws of n: pick an interval proportionally to its mass, then one of its
// endpoints by a fair coin.
std::vector<long long> sample_n(const MassAssignment& masses, int count, Rng& rng);

// Flat-prior posterior pmf over the same range, for calibration checks.
std::vector<double> bayes_posterior_n(const std::vector<long long>& y, double p,
                                      const IntegerInterval& range);

// Smallest upper set {lo, ..., q} of the pmf (anchored at `lo`) holding at
// least `level` probability.
IntegerInterval upper_interval(const std::vector<double>& pmf, long long lo, double level);

// Same from draws: q is the smallest value with empirical P(X <= q) >= level.
IntegerInterval upper_interval(const std::vector<long long>& draws, double level);

} // namespace gfi
