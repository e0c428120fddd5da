#include "gfi/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gfi/linalg.hpp"

namespace gfi {

namespace {

int veck_dim(int d) { return d * (d - 1) / 2; }

void check_veck(int d, const Eigen::VectorXd& veck) {
    if (veck.size() != veck_dim(d))
        throw std::invalid_argument("veck length does not match dimension");
}

} // namespace

Eigen::MatrixXd skew_from_veck(int d, const Eigen::VectorXd& veck) {
    check_veck(d, veck);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    int idx = 0;
    for (int k = 0; k < d; ++k) {
        for (int j = k + 1; j < d; ++j) {
            a(j, k) = veck[idx];
            a(k, j) = -veck[idx];
            ++idx;
        }
    }
    return a;
}

Eigen::VectorXd veck_from_skew(const Eigen::MatrixXd& skew) {
    const int d = static_cast<int>(skew.rows());
    if (skew.cols() != d) throw std::invalid_argument("veck_from_skew: matrix must be square");
    Eigen::VectorXd veck(veck_dim(d));
    int idx = 0;
    for (int k = 0; k < d; ++k)
        for (int j = k + 1; j < d; ++j) veck[idx++] = skew(j, k);
    return veck;
}

Eigen::MatrixXd cayley(const Eigen::MatrixXd& skew) {
    const int d = static_cast<int>(skew.rows());
    if (skew.cols() != d) throw std::invalid_argument("cayley: matrix must be square");
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    // (I - A)(I + A)^{-1} equals (I + A)^{-1}(I - A) because the factors
    // commute, which lets a single LU solve produce the product.
    return Eigen::PartialPivLU<Eigen::MatrixXd>(id + skew).solve(id - skew);
}

bool skew_from_rotation(const Eigen::MatrixXd& z, Eigen::MatrixXd& skew_out) {
    const int d = static_cast<int>(z.rows());
    if (z.cols() != d) throw std::invalid_argument("skew_from_rotation: matrix must be square");
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(id + z);
    if (!lu.isInvertible()) return false;
    skew_out = lu.solve(id - z);
    // Symmetrize away roundoff so downstream veck extraction is exact.
    skew_out = 0.5 * (skew_out - skew_out.transpose().eval());
    return true;
}

MvnData MvnData::from_observations(const Eigen::MatrixXd& obs) {
    if (obs.rows() < 2) throw std::invalid_argument("MvnData: need at least two observations");
    if (obs.cols() < 1) throw std::invalid_argument("MvnData: need at least one column");
    MvnData data;
    data.obs = obs;
    data.mean = obs.colwise().mean();
    const Eigen::MatrixXd centered = obs.rowwise() - data.mean.transpose();
    data.scatter = centered.transpose() * centered;
    return data;
}

Eigen::VectorXd dga_forward(const Eigen::VectorXd& mu, const Eigen::VectorXd& veck,
                            const Eigen::VectorXd& lambda, const Eigen::VectorXd& u) {
    const int d = static_cast<int>(mu.size());
    check_veck(d, veck);
    if (lambda.size() != d || u.size() != d)
        throw std::invalid_argument("dga_forward: size mismatch");
    const Eigen::MatrixXd z = cayley(skew_from_veck(d, veck));
    return mu + z * lambda.cwiseProduct(u);
}

Eigen::MatrixXd jacobian_columns(const Eigen::VectorXd& y_i, const Eigen::VectorXd& mu,
                                 const Eigen::VectorXd& veck, const Eigen::VectorXd& lambda) {
    const int d = static_cast<int>(mu.size());
    check_veck(d, veck);
    if (y_i.size() != d || lambda.size() != d)
        throw std::invalid_argument("jacobian_columns: size mismatch");

    const Eigen::MatrixXd a = skew_from_veck(d, veck);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_plus(id + a);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_minus(id - a);
    const Eigen::MatrixXd z = lu_plus.solve(id - a);
    const Eigen::MatrixXd b = lu_plus.solve(id);     // (I + A)^{-1}
    const Eigen::VectorXd r = y_i - mu;
    const Eigen::VectorXd v = lu_minus.solve(r);     // (I - A)^{-1}(y - mu)
    const Eigen::VectorXd w = (id + a) * v;          // Z^{-1}(y - mu)

    Eigen::MatrixXd cols(d, d + d + veck_dim(d));
    cols.leftCols(d) = id;
    for (int j = 0; j < d; ++j)
        cols.col(d + j) = (w[j] / lambda[j]) * z.col(j);
    int idx = 0;
    for (int k = 0; k < d; ++k)
        for (int j = k + 1; j < d; ++j, ++idx)
            cols.col(2 * d + idx) = 2.0 * (v[j] * b.col(k) - v[k] * b.col(j));
    return cols;
}

namespace {

// Stacked gradient at unit scales and the sample mean, reusing the solves
// across observations.
Eigen::MatrixXd jstar_stack(const Eigen::MatrixXd& obs, const Eigen::VectorXd& veck) {
    const int n = static_cast<int>(obs.rows());
    const int d = static_cast<int>(obs.cols());
    check_veck(d, veck);
    const Eigen::VectorXd mean = obs.colwise().mean();
    const Eigen::MatrixXd a = skew_from_veck(d, veck);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_plus(id + a);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_minus(id - a);
    const Eigen::MatrixXd z = lu_plus.solve(id - a);
    const Eigen::MatrixXd b = lu_plus.solve(id);
    const int kcols = d + d + d * (d - 1) / 2;

    Eigen::MatrixXd stack(n * d, kcols);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd r = obs.row(i).transpose() - mean;
        const Eigen::VectorXd v = lu_minus.solve(r);
        const Eigen::VectorXd w = (id + a) * v;
        auto block = stack.middleRows(i * d, d);
        block.leftCols(d) = id;
        for (int j = 0; j < d; ++j) block.col(d + j) = w[j] * z.col(j);
        int idx = 0;
        for (int k = 0; k < d; ++k)
            for (int j = k + 1; j < d; ++j, ++idx)
                block.col(2 * d + idx) = 2.0 * (v[j] * b.col(k) - v[k] * b.col(j));
    }
    return stack;
}

} // namespace

double jstar(const Eigen::MatrixXd& obs, const Eigen::VectorXd& veck) {
    return pseudo_det(jstar_stack(obs, veck));
}

double log_jstar(const Eigen::MatrixXd& obs, const Eigen::VectorXd& veck) {
    return log_pseudo_det(jstar_stack(obs, veck));
}

double log_marginal_A(const MvnData& data, const Eigen::VectorXd& veck) {
    const int d = data.d();
    check_veck(d, veck);
    if (veck.size() > 0 && veck.cwiseAbs().maxCoeff() > 1.0)
        return -std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd z = cayley(skew_from_veck(d, veck));
    const Eigen::VectorXd t = (z.transpose() * data.scatter * z).diagonal();
    if ((t.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
    const double lj = log_jstar(data.obs, veck);
    if (!std::isfinite(lj)) return -std::numeric_limits<double>::infinity();
    const double expo = -0.5 * (data.n() - 1);
    return lj + expo * t.array().log().sum();
}

Eigen::VectorXd sample_lambda_given_A(const MvnData& data, const Eigen::VectorXd& veck,
                                      Rng& rng) {
    const int d = data.d();
    check_veck(d, veck);
    const Eigen::MatrixXd z = cayley(skew_from_veck(d, veck));
    const Eigen::VectorXd t = (z.transpose() * data.scatter * z).diagonal();
    Eigen::VectorXd lambda(d);
    const double shape = 0.5 * (data.n() - 1);
    for (int i = 0; i < d; ++i) {
        if (!(t[i] > 0.0))
            throw std::runtime_error("sample_lambda_given_A: degenerate scatter");
        const double prec = rng.gamma(shape, 0.5 * t[i]);
        lambda[i] = 1.0 / std::sqrt(prec);
    }
    return lambda;
}

Eigen::VectorXd sample_mu_given(const MvnData& data, const Eigen::VectorXd& veck,
                                const Eigen::VectorXd& lambda, Rng& rng) {
    const int d = data.d();
    check_veck(d, veck);
    if (lambda.size() != d) throw std::invalid_argument("sample_mu_given: lambda size mismatch");
    const Eigen::MatrixXd z = cayley(skew_from_veck(d, veck));
    Eigen::VectorXd noise(d);
    for (int i = 0; i < d; ++i) noise[i] = lambda[i] * rng.normal();
    return data.mean + z * noise / std::sqrt(static_cast<double>(data.n()));
}

namespace {

// Starting rotation: eigenvectors of the scatter, with a per-chain random
// eigenvalue ordering, pushed through the inverse Cayley map under the sign
// flip that keeps the parameters smallest. Falls back to the identity
// rotation when every signed variant leaves the unit box.
Eigen::VectorXd initial_veck(const MvnData& data, Rng& rng) {
    const int d = data.d();
    if (d == 1) return Eigen::VectorXd(0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(data.scatter);
    if (eig.info() != Eigen::Success) return Eigen::VectorXd::Zero(veck_dim(d));
    Eigen::MatrixXd v = eig.eigenvectors();

    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = d - 1; i > 0; --i)
        std::swap(perm[i], perm[static_cast<int>(rng.uniform_int(i + 1))]);
    Eigen::MatrixXd vp(d, d);
    for (int i = 0; i < d; ++i) vp.col(i) = v.col(perm[i]);

    double best_norm = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best = Eigen::VectorXd::Zero(veck_dim(d));
    Eigen::MatrixXd skew;
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
        Eigen::MatrixXd cand = vp;
        for (int i = 0; i < d; ++i)
            if (mask & (1u << i)) cand.col(i) *= -1.0;
        if (!skew_from_rotation(cand, skew)) continue;
        const Eigen::VectorXd veck = veck_from_skew(skew);
        const double mx = veck.size() ? veck.cwiseAbs().maxCoeff() : 0.0;
        if (mx < 1.0 - 1e-9 && mx < best_norm) {
            best_norm = mx;
            best = veck;
        }
    }
    return best;
}

} // namespace

MvnRun run_chains(const MvnData& data, const MvnChainConfig& config) {
    const int d = data.d();
    if (config.chains < 1) throw std::invalid_argument("run_chains: need at least one chain");
    if (config.iterations <= config.burn_in || config.burn_in < 0)
        throw std::invalid_argument("run_chains: iterations must exceed burn_in");
    const int kdim = veck_dim(d);

    MvnRun run;
    run.draws.reserve(static_cast<std::size_t>(config.chains) *
                      (config.iterations - config.burn_in));

    for (int chain = 0; chain < config.chains; ++chain) {
        Rng rng(config.seed + static_cast<std::uint64_t>(chain));
        Eigen::VectorXd veck = initial_veck(data, rng);
        double logm = log_marginal_A(data, veck);
        if (!std::isfinite(logm)) {
            veck.setZero();
            logm = log_marginal_A(data, veck);
        }

        double sd = config.proposal_sd > 0.0 ? config.proposal_sd
                                             : (kdim > 0 ? 0.1 / std::sqrt(d * (d - 1.0)) : 0.0);
        int window_accepts = 0;
        int window_total = 0;
        long long accepted = 0;
        long long attempted = 0;

        for (int it = 0; it < config.iterations; ++it) {
            if (kdim > 0) {
                Eigen::VectorXd prop(kdim);
                for (int j = 0; j < kdim; ++j) prop[j] = veck[j] + sd * rng.normal();
                bool inside = prop.cwiseAbs().maxCoeff() <= 1.0;
                if (inside) {
                    const double logp = log_marginal_A(data, prop);
                    if (std::isfinite(logp) &&
                        std::log(rng.uniform()) <= logp - logm) {
                        veck = prop;
                        logm = logp;
                        ++window_accepts;
                        if (it >= config.burn_in) ++accepted;
                    }
                }
                ++window_total;
                if (it >= config.burn_in) ++attempted;

                // Burn-in tuning toward 30% acceptance, frozen afterwards.
                if (it < config.burn_in && window_total == 50) {
                    const double rate = static_cast<double>(window_accepts) / window_total;
                    sd *= std::exp(rate - 0.3);
                    sd = std::clamp(sd, 1e-6, 2.0);
                    window_accepts = 0;
                    window_total = 0;
                }
            }

            if (it >= config.burn_in) {
                MvnDraw draw;
                draw.chain = chain;
                draw.veck = veck;
                draw.lambda = sample_lambda_given_A(data, veck, rng);
                draw.mu = sample_mu_given(data, veck, draw.lambda, rng);
                const Eigen::MatrixXd z = cayley(skew_from_veck(d, veck));
                draw.cov = z * draw.lambda.array().square().matrix().asDiagonal() * z.transpose();
                run.draws.push_back(std::move(draw));
            }
        }

        const double rate = kdim > 0 && attempted > 0
                                ? static_cast<double>(accepted) / static_cast<double>(attempted)
                                : 1.0;
        run.acceptance.push_back(rate);
        if (kdim > 0 && (rate < 0.1 || rate > 0.6))
            std::fprintf(stderr,
                         "warning: chain %d post burn-in acceptance %.3f outside [0.1, 0.6]\n",
                         chain, rate);
    }
    return run;
}

} // namespace gfi
