#include "gfi/binom_n.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "gfi/special.hpp"

namespace gfi {

namespace {

constexpr long long kScanCap = 1000000;
constexpr long long kMassRangeCap = 4000;

void check_inputs(const std::vector<long long>& y, double p) {
    if (y.empty()) throw std::invalid_argument("binom_n: counts must be nonempty");
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("binom_n: p must lie strictly inside (0, 1)");
    for (const long long yi : y)
        if (yi < 0) throw std::invalid_argument("binom_n: counts must be nonnegative");
}

struct DistinctCounts {
    std::vector<long long> value;
    std::vector<double> count;
};

DistinctCounts tally(const std::vector<long long>& y) {
    std::map<long long, double> acc;
    for (const long long yi : y) acc[yi] += 1.0;
    DistinctCounts out;
    for (const auto& [v, c] : acc) {
        out.value.push_back(v);
        out.count.push_back(c);
    }
    return out;
}

double log_commonality_tabled(const std::vector<std::vector<double>>& cdf_at,
                              const std::vector<std::vector<double>>& cdf_below,
                              const DistinctCounts& dc,
                              std::size_t a_idx, std::size_t b_idx) {
    double lp = 0.0;
    for (std::size_t g = 0; g < dc.value.size(); ++g) {
        const double diff = cdf_at[b_idx][g] - cdf_below[a_idx][g];
        if (!(diff > 0.0)) return -std::numeric_limits<double>::infinity();
        lp += dc.count[g] * std::log(diff);
    }
    return lp;
}

} // namespace

std::size_t MassAssignment::interval_index(long long a, long long b) const {
    const long long k = range.length();
    const long long ia = a - range.lo;
    const long long ib = b - range.lo;
    if (ia < 0 || ib >= k || ia > ib)
        throw std::out_of_range("MassAssignment: interval outside range");
    // Row ia holds intervals [a, a..hi]: k - ia entries, offset by the
    // triangle of earlier rows.
    const long long offset = ia * k - ia * (ia - 1) / 2;
    return static_cast<std::size_t>(offset + (ib - ia));
}

double commonality(const IntegerInterval& s, const std::vector<long long>& y, double p) {
    check_inputs(y, p);
    if (s.lo > s.hi) throw std::invalid_argument("commonality: empty interval");
    if (s.lo < 0) throw std::invalid_argument("commonality: negative trial count");
    double prod = 1.0;
    for (const long long yi : y) {
        const double diff = binom_cdf(s.hi, p, yi) - binom_cdf(s.lo, p, yi - 1);
        if (!(diff > 0.0)) return 0.0;
        prod *= diff;
    }
    return prod;
}

IntegerInterval candidate_range(const std::vector<long long>& y, double p, double eps1) {
    check_inputs(y, p);
    if (!(eps1 > 0.0 && eps1 < 1.0))
        throw std::invalid_argument("candidate_range: eps1 must lie in (0, 1)");
    const long long lo = *std::max_element(y.begin(), y.end());
    double best = 0.0;
    long long hi = lo - 1;
    for (long long n = lo; n - lo < kScanCap; ++n) {
        const double c = commonality({n, n}, y, p);
        best = std::max(best, c);
        if (best <= 0.0) {
            // No viable candidate yet (can only happen transiently when all
            // factors underflow); treat as failing the ratio test once a
            // positive maximum has been seen.
            hi = n;
            continue;
        }
        if (c / best < eps1) return {lo, hi};
        hi = n;
    }
    throw std::runtime_error("candidate_range: scan exceeded 1000000 candidates");
}

MassAssignment ds_masses(const IntegerInterval& range, const std::vector<long long>& y, double p) {
    check_inputs(y, p);
    if (range.lo > range.hi) throw std::invalid_argument("ds_masses: empty range");
    const long long k = range.length();
    if (k > kMassRangeCap)
        throw std::runtime_error("ds_masses: range too wide; increase eps1");
    const auto dc = tally(y);
    const std::size_t ng = dc.value.size();

    // CDF tables per candidate n: at y_g and strictly below y_g.
    std::vector<std::vector<double>> cdf_at(k, std::vector<double>(ng));
    std::vector<std::vector<double>> cdf_below(k, std::vector<double>(ng));
    for (long long t = 0; t < k; ++t) {
        const long long n = range.lo + t;
        for (std::size_t g = 0; g < ng; ++g) {
            cdf_at[t][g] = binom_cdf(n, p, dc.value[g]);
            cdf_below[t][g] = binom_cdf(n, p, dc.value[g] - 1);
        }
    }

    // Interval commonalities in the log domain, then rescaled by the
    // largest one so that the clamped subtraction below runs in a linear
    // domain without underflow. The final renormalization cancels the
    // common scale; only empty_mass needs the true scale back.
    std::vector<double> logc(static_cast<std::size_t>(k) * (k + 1) / 2);
    double logc_max = -std::numeric_limits<double>::infinity();
    MassAssignment out;
    out.range = range;
    for (long long a = 0; a < k; ++a) {
        for (long long b = a; b < k; ++b) {
            const double lp = log_commonality_tabled(cdf_at, cdf_below, dc,
                                                     static_cast<std::size_t>(a),
                                                     static_cast<std::size_t>(b));
            logc[out.interval_index(range.lo + a, range.lo + b)] = lp;
            logc_max = std::max(logc_max, lp);
        }
    }
    if (!std::isfinite(logc_max))
        throw std::runtime_error("ds_masses: all interval commonalities are zero");

    std::vector<double> scaled(logc.size());
    for (std::size_t i = 0; i < logc.size(); ++i)
        scaled[i] = std::exp(logc[i] - logc_max);

    // Moebius step, longest intervals first. super[a][b] accumulates the
    // scaled mass of processed intervals [a', b'] with a' <= a, b' >= b via
    // a prefix sum refreshed per length.
    std::vector<double> mass(scaled.size(), 0.0);
    std::vector<std::vector<double>> placed(k, std::vector<double>(k, 0.0));
    std::vector<std::vector<double>> super(k, std::vector<double>(k, 0.0));
    for (long long len = k; len >= 1; --len) {
        if (len < k) {
            // super(a, b) = sum over placed[a'][b'] with a' <= a, b' >= b.
            for (long long a = 0; a < k; ++a) {
                double run = 0.0;
                for (long long b = k - 1; b >= 0; --b) {
                    run += placed[a][b];
                    super[a][b] = run + (a > 0 ? super[a - 1][b] : 0.0);
                }
            }
        }
        for (long long a = 0; a + len - 1 < k; ++a) {
            const long long b = a + len - 1;
            const std::size_t idx = out.interval_index(range.lo + a, range.lo + b);
            const double hang = (len < k) ? super[a][b] : 0.0;
            const double m = std::max(0.0, scaled[idx] - hang);
            mass[idx] = m;
            placed[a][b] = m;
        }
    }

    double total_scaled = 0.0;
    for (const double m : mass) total_scaled += m;
    if (!(total_scaled > 0.0))
        throw std::runtime_error("ds_masses: no interval received positive mass");

    out.mass.resize(mass.size());
    for (std::size_t i = 0; i < mass.size(); ++i) out.mass[i] = mass[i] / total_scaled;
    const double total_raw = total_scaled * std::exp(logc_max);
    out.empty_mass = std::clamp(1.0 - total_raw, 0.0, 1.0);
    return out;
}

std::vector<double> endpoint_pmf(const MassAssignment& masses) {
    const long long k = masses.range.length();
    std::vector<double> pmf(static_cast<std::size_t>(k), 0.0);
    for (long long a = 0; a < k; ++a) {
        for (long long b = a; b < k; ++b) {
            const double m = masses.mass[masses.interval_index(masses.range.lo + a,
                                                               masses.range.lo + b)];
            if (m == 0.0) continue;
            pmf[static_cast<std::size_t>(a)] += 0.5 * m;
            pmf[static_cast<std::size_t>(b)] += 0.5 * m;
        }
    }
    return pmf;
}

std::vector<long long> sample_n(const MassAssignment& masses, int count, Rng& rng) {
    if (count < 0) throw std::invalid_argument("sample_n: count must be nonnegative");
    const long long k = masses.range.length();
    // Cumulative over intervals in index order.
    std::vector<double> cum(masses.mass.size());
    double run = 0.0;
    for (std::size_t i = 0; i < masses.mass.size(); ++i) {
        run += masses.mass[i];
        cum[i] = run;
    }
    std::vector<long long> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double u = rng.uniform() * run;
        const auto it = std::lower_bound(cum.begin(), cum.end(), u);
        std::size_t idx = static_cast<std::size_t>(it - cum.begin());
        if (idx >= cum.size()) idx = cum.size() - 1;
        // Invert the triangular layout: find row a, then b.
        long long a = 0;
        std::size_t offset = 0;
        while (offset + static_cast<std::size_t>(k - a) <= idx) {
            offset += static_cast<std::size_t>(k - a);
            ++a;
        }
        const long long b = a + static_cast<long long>(idx - offset);
        const long long lo = masses.range.lo + a;
        const long long hi = masses.range.lo + b;
        out.push_back(rng.uniform() <= 0.5 ? lo : hi);
    }
    return out;
}

std::vector<double> bayes_posterior_n(const std::vector<long long>& y, double p,
                                      const IntegerInterval& range) {
    check_inputs(y, p);
    if (range.lo > range.hi) throw std::invalid_argument("bayes_posterior_n: empty range");
    const long long k = range.length();
    std::vector<double> loglik(static_cast<std::size_t>(k));
    double best = -std::numeric_limits<double>::infinity();
    for (long long t = 0; t < k; ++t) {
        const long long n = range.lo + t;
        double ll = 0.0;
        for (const long long yi : y) ll += binom_log_pmf(n, p, yi);
        loglik[static_cast<std::size_t>(t)] = ll;
        best = std::max(best, ll);
    }
    double total = 0.0;
    std::vector<double> pmf(loglik.size());
    for (std::size_t t = 0; t < pmf.size(); ++t) {
        pmf[t] = std::isfinite(loglik[t]) ? std::exp(loglik[t] - best) : 0.0;
        total += pmf[t];
    }
    for (double& v : pmf) v /= total;
    return pmf;
}

IntegerInterval upper_interval(const std::vector<double>& pmf, long long lo, double level) {
    if (pmf.empty()) throw std::invalid_argument("upper_interval: empty pmf");
    if (!(level >= 0.0 && level <= 1.0))
        throw std::invalid_argument("upper_interval: level must lie in [0, 1]");
    double run = 0.0;
    for (std::size_t t = 0; t < pmf.size(); ++t) {
        run += pmf[t];
        if (run >= level - 1e-12) return {lo, lo + static_cast<long long>(t)};
    }
    return {lo, lo + static_cast<long long>(pmf.size()) - 1};
}

IntegerInterval upper_interval(const std::vector<long long>& draws, double level) {
    if (draws.empty()) throw std::invalid_argument("upper_interval: no draws");
    if (!(level >= 0.0 && level <= 1.0))
        throw std::invalid_argument("upper_interval: level must lie in [0, 1]");
    std::vector<long long> sorted = draws;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t need = static_cast<std::size_t>(
        std::ceil(level * static_cast<double>(sorted.size()) - 1e-12));
    const std::size_t idx = need == 0 ? 0 : std::min(need - 1, sorted.size() - 1);
    return {sorted.front(), sorted[idx]};
}

} // namespace gfi
