#include "gfi/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gfi {

double spectral_norm(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double frobenius_norm(const Eigen::MatrixXd& m) { return m.norm(); }

double log_det(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("log_det: matrix is not positive definite");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double fm_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("fm_distance: base matrix is not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::MatrixXd w =
        l.triangularView<Eigen::Lower>().solve(
            l.triangularView<Eigen::Lower>().solve(b).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double ev = es.eigenvalues()[i];
        if (!(ev > 0.0))
            throw std::invalid_argument("fm_distance: arguments must both be positive definite");
        const double lv = std::log(ev);
        s += lv * lv;
    }
    return std::sqrt(s);
}

double stein_loss(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("stein_loss: base matrix is not positive definite");
    const Eigen::MatrixXd ainv_b = llt.solve(b);
    const double tr = ainv_b.trace();
    const double ld = log_det(b) - log_det(a);
    return tr - ld - static_cast<double>(a.rows());
}

double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile_type7: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_type7: p outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= values.size()) return values.back();
    const double frac = h - std::floor(h);
    return values[i] + frac * (values[i + 1] - values[i]);
}

Interval central_interval(const std::vector<double>& values, double level) {
    if (!(level >= 0.0 && level < 1.0))
        throw std::invalid_argument("central_interval: level outside [0, 1)");
    const double alpha = 1.0 - level;
    Interval out;
    out.lo = quantile_type7(values, alpha / 2.0);
    out.hi = quantile_type7(values, 1.0 - alpha / 2.0);
    return out;
}

BallRegion ball_region(const std::vector<Eigen::MatrixXd>& draws, double level,
                       const MatrixMetric& metric) {
    if (draws.empty()) throw std::invalid_argument("ball_region: empty sample");
    BallRegion region;
    region.center = Eigen::MatrixXd::Zero(draws.front().rows(), draws.front().cols());
    for (const auto& d : draws) region.center += d;
    region.center /= static_cast<double>(draws.size());
    std::vector<double> dist;
    dist.reserve(draws.size());
    for (const auto& d : draws) dist.push_back(metric(d, region.center));
    region.radius = quantile_type7(std::move(dist), level);
    return region;
}

bool ball_contains(const BallRegion& region, const Eigen::MatrixXd& x,
                   const MatrixMetric& metric) {
    return metric(x, region.center) <= region.radius;
}

namespace {

double iqr_or_one(std::vector<double> v) {
    const double q1 = quantile_type7(v, 0.25);
    const double q3 = quantile_type7(std::move(v), 0.75);
    const double w = q3 - q1;
    return w > 0.0 ? w : 1.0;
}

// Smallest multiplier t such that the centered box c +- t * b contains the
// point (n, interval closest point).
double point_multiplier(double n, double mu_lo, double mu_hi, double cn, double cmu,
                        double bn, double bmu) {
    const double tn = std::fabs(n - cn) / bn;
    double gap = 0.0;
    if (cmu < mu_lo) gap = mu_lo - cmu;
    else if (cmu > mu_hi) gap = cmu - mu_hi;
    return std::max(tn, gap / bmu);
}

} // namespace

NpBoxPair np_boxes(const std::vector<NpDrawSummary>& draws, double level) {
    if (draws.empty()) throw std::invalid_argument("np_boxes: empty sample");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("np_boxes: level outside (0, 1)");
    const std::size_t k = draws.size();

    std::vector<double> rep_n(k), rep_mu(k);
    for (std::size_t i = 0; i < k; ++i) {
        rep_n[i] = static_cast<double>(draws[i].rep_n);
        rep_mu[i] = draws[i].rep_mu;
    }
    const double cn = quantile_type7(rep_n, 0.5);
    const double cmu = quantile_type7(rep_mu, 0.5);
    const double bn = iqr_or_one(rep_n);
    const double bmu = iqr_or_one(rep_mu);

    std::vector<double> t_belief(k), t_plaus(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& d = draws[i];
        if (d.unbounded) {
            t_belief[i] = std::numeric_limits<double>::infinity();
        } else {
            const double tn = std::max(std::fabs(static_cast<double>(d.n_min) - cn),
                                       std::fabs(static_cast<double>(d.n_last) - cn)) / bn;
            const double tmu = std::max(std::fabs(d.mu_min - cmu),
                                        std::fabs(d.mu_max - cmu)) / bmu;
            t_belief[i] = std::max(tn, tmu);
        }

        double tp = std::numeric_limits<double>::infinity();
        for (const auto& e : d.segment)
            tp = std::min(tp, point_multiplier(static_cast<double>(e.n), e.mu_lo,
                                               e.mu_hi, cn, cmu, bn, bmu));
        if (d.unbounded)
            tp = std::min(tp, point_multiplier(static_cast<double>(d.n_last),
                                               d.tail_mu_lo, d.tail_mu_hi,
                                               cn, cmu, bn, bmu));
        t_plaus[i] = tp;
    }

    const auto need =
        std::min(k, static_cast<std::size_t>(std::ceil(level * static_cast<double>(k) - 1e-12)));
    auto pick = [&](std::vector<double> t) {
        std::sort(t.begin(), t.end());
        return t[need == 0 ? 0 : need - 1];
    };

    NpBoxPair out;
    const double tb = pick(t_belief);
    if (std::isfinite(tb)) {
        out.belief = {cn - tb * bn, cn + tb * bn, cmu - tb * bmu, cmu + tb * bmu, false};
    } else {
        double tmax = 0.0;
        for (const double t : t_belief)
            if (std::isfinite(t)) tmax = std::max(tmax, t);
        out.belief = {cn - tmax * bn, std::numeric_limits<double>::infinity(),
                      cmu - tmax * bmu, cmu + tmax * bmu, true};
    }
    const double tp = pick(t_plaus);
    out.plaus = {cn - tp * bn, cn + tp * bn, cmu - tp * bmu, cmu + tp * bmu, false};
    return out;
}

} // namespace gfi
