#include "gfi/binom_p.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gfi/special.hpp"

namespace gfi {

namespace {

double beta_pdf(double a, double b, double p) {
    if (p <= 0.0 || p >= 1.0) {
        // Endpoint conventions: the limit is finite only when the nearby
        // shape parameter exceeds one; callers stay inside (0, 1).
        return 0.0;
    }
    const double lb = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return std::exp((a - 1.0) * std::log(p) + (b - 1.0) * std::log1p(-p) - lb);
}

void check_pair(long long y, long long n) {
    if (n <= 0) throw std::invalid_argument("binom_p: n must be positive");
    if (y < 0 || y > n) throw std::invalid_argument("binom_p: y must lie in [0, n]");
}

} // namespace

long long BinPModel::total_count() const {
    return std::accumulate(counts.begin(), counts.end(), 0LL);
}

std::pair<double, double> gfd_interval_p(long long y, long long n, Rng& rng) {
    check_pair(y, n);
    // Dirichlet spacings (y, 1, n - y): the interval between the y-th and
    // (y+1)-th uniform order statistics out of n.
    const double g1 = y > 0 ? rng.gamma(static_cast<double>(y), 1.0) : 0.0;
    const double g2 = rng.gamma(1.0, 1.0);
    const double g3 = y < n ? rng.gamma(static_cast<double>(n - y), 1.0) : 0.0;
    const double t = g1 + g2 + g3;
    return {g1 / t, (g1 + g2) / t};
}

double gfd_density_p(long long y, long long n, double p, PConvention convention) {
    check_pair(y, n);
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("gfd_density_p: p must lie in [0, 1]");
    switch (convention) {
        case PConvention::Arithmetic: {
            // Equal mixture of the two endpoint laws. The y = 0 lower
            // endpoint is the constant 0; its half of the mixture is a
            // point mass, so only the upper Beta(1, n) leg carries density
            // (mirrored at y = n).
            double dens = 0.0;
            if (y > 0) dens += 0.5 * beta_pdf(static_cast<double>(y), static_cast<double>(n - y + 1), p);
            if (y < n) dens += 0.5 * beta_pdf(static_cast<double>(y + 1), static_cast<double>(n - y), p);
            return dens;
        }
        case PConvention::Geometric:
            return beta_pdf(y + 0.5, n - y + 0.5, p);
    }
    throw std::logic_error("gfd_density_p: unknown convention");
}

std::vector<double> gfd_sample_p(const BinPModel& model, PConvention convention,
                                 int count, Rng& rng) {
    if (model.trials <= 0)
        throw std::invalid_argument("gfd_sample_p: trials must be positive");
    if (model.counts.empty())
        throw std::invalid_argument("gfd_sample_p: counts must be nonempty");
    for (const long long y : model.counts)
        if (y < 0 || y > model.trials)
            throw std::invalid_argument("gfd_sample_p: count outside [0, trials]");
    if (count < 0) throw std::invalid_argument("gfd_sample_p: count must be nonnegative");

    const long long n = model.total_trials();
    const long long y = model.total_count();
    std::vector<double> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        switch (convention) {
            case PConvention::Arithmetic: {
                const auto [lo, hi] = gfd_interval_p(y, n, rng);
                out.push_back(rng.uniform() <= 0.5 ? lo : hi);
                break;
            }
            case PConvention::Geometric:
                out.push_back(sample_beta(y + 0.5, n - y + 0.5, rng));
                break;
        }
    }
    return out;
}

} // namespace gfi
