#include "gfi/ranef.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gfi/linalg.hpp"

namespace gfi {

namespace {

void check_model(const Eigen::VectorXd& y, const ReModel& model) {
    if (model.group_sizes.empty())
        throw std::invalid_argument("ranef: need at least one group");
    for (const int ni : model.group_sizes)
        if (ni <= 0) throw std::invalid_argument("ranef: group sizes must be positive");
    if (model.total_size() != y.size())
        throw std::invalid_argument("ranef: y length must match group sizes");
    if (model.design.size() > 0 && model.design.rows() != y.size())
        throw std::invalid_argument("ranef: design rows must match y length");
}

Eigen::VectorXd group_sum_broadcast(const std::vector<int>& sizes, const Eigen::VectorXd& v) {
    Eigen::VectorXd out(v.size());
    Eigen::Index off = 0;
    for (const int ni : sizes) {
        const double s = v.segment(off, ni).sum();
        out.segment(off, ni).setConstant(s);
        off += ni;
    }
    return out;
}

// Stacked gradient [X | dY/dsigma_e2 | dY/dsigma_a2]; the group-effect
// column is dropped when the effect is excluded.
Eigen::MatrixXd gradient_stack(const Eigen::VectorXd& y, const ReModel& model,
                               const ReParams& params) {
    const Eigen::MatrixXd x = model.design_or_intercept();
    const Eigen::VectorXd r = y - x * params.beta;
    Eigen::VectorXd solved;
    if (model.include_group_effect) {
        solved = re_cov_logdet_solve(params.sigma_a2, params.sigma_e2,
                                     model.group_sizes, r).second;
    } else {
        solved = r / params.sigma_e2;
    }
    const Eigen::Index q = x.cols();
    Eigen::MatrixXd stack(y.size(), q + (model.include_group_effect ? 2 : 1));
    stack.leftCols(q) = x;
    stack.col(q) = 0.5 * solved;
    if (model.include_group_effect)
        stack.col(q + 1) = 0.5 * group_sum_broadcast(model.group_sizes, solved);
    return stack;
}

} // namespace

int ReModel::total_size() const {
    return static_cast<int>(std::accumulate(group_sizes.begin(), group_sizes.end(), 0));
}

Eigen::MatrixXd ReModel::design_or_intercept() const {
    if (design.size() > 0) return design;
    return Eigen::MatrixXd::Ones(total_size(), 1);
}

double re_jacobian(const Eigen::VectorXd& y, const ReModel& model, const ReParams& params) {
    check_model(y, model);
    if (!(params.sigma_e2 > 0.0) || params.sigma_a2 < 0.0)
        throw std::invalid_argument("re_jacobian: invalid variances");
    return pseudo_det(gradient_stack(y, model, params));
}

double re_log_density(const Eigen::VectorXd& y, const ReModel& model, const ReParams& params) {
    check_model(y, model);
    if (!(params.sigma_e2 > 0.0) || params.sigma_a2 < 0.0 ||
        (!model.include_group_effect && params.sigma_a2 != 0.0))
        return -std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd x = model.design_or_intercept();
    if (params.beta.size() != x.cols())
        throw std::invalid_argument("re_log_density: beta size mismatch");
    const Eigen::VectorXd r = y - x * params.beta;

    double logdet;
    Eigen::VectorXd solved;
    if (model.include_group_effect) {
        auto [ld, s] = re_cov_logdet_solve(params.sigma_a2, params.sigma_e2,
                                           model.group_sizes, r);
        logdet = ld;
        solved = std::move(s);
    } else {
        logdet = y.size() * std::log(params.sigma_e2);
        solved = r / params.sigma_e2;
    }
    const double quad = r.dot(solved);
    const double loglik = -0.5 * (y.size() * std::log(2.0 * M_PI) + logdet + quad);
    const double lj = log_pseudo_det(gradient_stack(y, model, params));
    if (!std::isfinite(lj)) return -std::numeric_limits<double>::infinity();
    return loglik + lj;
}

ReRun re_sample(const Eigen::VectorXd& y, const ReModel& model, const ReChainConfig& config) {
    check_model(y, model);
    if (config.iterations <= config.burn_in || config.burn_in < 0)
        throw std::invalid_argument("re_sample: iterations must exceed burn_in");
    const Eigen::MatrixXd x = model.design_or_intercept();
    const Eigen::Index q = x.cols();
    const int ngroups = static_cast<int>(model.group_sizes.size());
    const bool with_effect = model.include_group_effect;

    // Moment starting values: least squares for beta, within-group mean
    // square for sigma_e2, variance of group means for sigma_a2.
    Eigen::VectorXd beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    const Eigen::VectorXd resid = y - x * beta;
    double sse_within = 0.0;
    double mean_inv_size = 0.0;
    std::vector<double> gmeans(ngroups);
    {
        Eigen::Index off = 0;
        for (int g = 0; g < ngroups; ++g) {
            const int ni = model.group_sizes[g];
            const auto seg = resid.segment(off, ni);
            const double m = seg.mean();
            gmeans[g] = m;
            sse_within += (seg.array() - m).square().sum();
            mean_inv_size += 1.0 / ni;
            off += ni;
        }
        mean_inv_size /= ngroups;
    }
    const int df_within = static_cast<int>(y.size()) - ngroups;
    double se2 = df_within > 0 ? sse_within / df_within
                               : resid.squaredNorm() / std::max<Eigen::Index>(y.size(), 2);
    if (!(se2 > 0.0)) se2 = 1e-3;
    double between = 0.0;
    {
        const double gm = std::accumulate(gmeans.begin(), gmeans.end(), 0.0) / ngroups;
        for (const double m : gmeans) between += (m - gm) * (m - gm);
        between = ngroups > 1 ? between / (ngroups - 1) : se2;
    }
    double sa2 = std::max(between - se2 * mean_inv_size, 0.05 * se2);

    const Eigen::Index dim = q + (with_effect ? 2 : 1);
    Eigen::VectorXd theta(dim);
    theta.head(q) = beta;
    theta[q] = std::log(se2);
    if (with_effect) theta[q + 1] = std::log(sa2);

    // Per-coordinate proposal spread: roughly the standard error for beta,
    // order one for the log variances; one adaptive global factor.
    Eigen::VectorXd base(dim);
    const double marginal_sd = std::sqrt(se2 + (with_effect ? sa2 : 0.0));
    for (Eigen::Index j = 0; j < q; ++j) {
        const double cn = x.col(j).norm();
        base[j] = cn > 0.0 ? 2.4 * marginal_sd / cn : 0.1;
    }
    base[q] = 0.5;
    if (with_effect) base[q + 1] = 0.8;

    auto target = [&](const Eigen::VectorXd& th) {
        ReParams p;
        p.beta = th.head(q);
        p.sigma_e2 = std::exp(th[q]);
        p.sigma_a2 = with_effect ? std::exp(th[q + 1]) : 0.0;
        double lp = re_log_density(y, model, p);
        if (!std::isfinite(lp)) return lp;
        lp += th[q];                      // d sigma_e2 / d log sigma_e2
        if (with_effect) lp += th[q + 1];
        return lp;
    };

    Rng rng(config.seed);
    double logm = target(theta);
    if (!std::isfinite(logm))
        throw std::runtime_error("re_sample: starting point has zero density");

    double scale = config.proposal_scale > 0.0 ? config.proposal_scale : 0.4;
    int window_accepts = 0;
    int window_total = 0;
    long long accepted = 0;
    long long attempted = 0;

    ReRun run;
    run.draws.reserve(config.iterations - config.burn_in);
    for (int it = 0; it < config.iterations; ++it) {
        Eigen::VectorXd prop = theta;
        for (Eigen::Index j = 0; j < dim; ++j) prop[j] += scale * base[j] * rng.normal();
        const double logp = target(prop);
        const bool accept = std::isfinite(logp) && std::log(rng.uniform()) <= logp - logm;
        if (accept) {
            theta = prop;
            logm = logp;
            ++window_accepts;
            if (it >= config.burn_in) ++accepted;
        }
        ++window_total;
        if (it >= config.burn_in) ++attempted;

        if (it < config.burn_in && window_total == 50) {
            const double rate = static_cast<double>(window_accepts) / window_total;
            scale *= std::exp(rate - 0.3);
            scale = std::clamp(scale, 1e-4, 10.0);
            window_accepts = 0;
            window_total = 0;
        }

        if (it >= config.burn_in) {
            ReDraw draw;
            draw.beta = theta.head(q);
            draw.sigma_e2 = std::exp(theta[q]);
            draw.sigma_a2 = with_effect ? std::exp(theta[q + 1]) : 0.0;
            run.draws.push_back(std::move(draw));
        }
    }
    run.acceptance = attempted > 0 ? static_cast<double>(accepted) / attempted : 0.0;
    if (run.acceptance < 0.1 || run.acceptance > 0.6)
        std::fprintf(stderr, "warning: random-effects chain acceptance %.3f outside [0.1, 0.6]\n",
                     run.acceptance);
    return run;
}

} // namespace gfi
