#pragma once

#include <utility>
#include <vector>

#include "gfi/rng.hpp"

namespace gfi {

// Fiducial machinery for the success probability of binomial counts with a
// known number of trials per observation.

// How a draw is formed from the random endpoint pair of the fiducial
// interval for p.
enum class PConvention {
    // Endpoint chosen by a fair coin; the density is an equal mixture of
    // Beta(y, n - y + 1) and Beta(y + 1, n - y).
    Arithmetic,
    // Smooth compromise with density Beta(y + 1/2, n - y + 1/2).
    Geometric,
};

struct BinPModel {
    long long trials = 0;        // trials per observation
    std::vector<long long> counts;

    long long total_trials() const { return trials * static_cast<long long>(counts.size()); }
    long long total_count() const;
};

// One draw of the random fiducial interval (lower, upper] for p given a
// pooled count y out of n trials. The pair of endpoints is drawn jointly
// from the spacing construction around the y-th uniform order statistic:
// lower ~ Beta(y, n - y + 1), upper ~ Beta(y + 1, n - y), coupled so that
// lower <= upper always. y = 0 gives lower = 0 and y = n gives upper = 1.
std::pair<double, double> gfd_interval_p(long long y, long long n, Rng& rng);

// Density at p of the fiducial distribution under the given convention.
double gfd_density_p(long long y, long long n, double p, PConvention convention);

// Draws from the fiducial distribution for the pooled model (counts are
// summed; trials pool to trials * m).
std::vector<double> gfd_sample_p(const BinPModel& model, PConvention convention,
                                 int count, Rng& rng);

} // namespace gfi
