#include "gfi/studies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "gfi/binom_n.hpp"
#include "gfi/binom_np.hpp"
#include "gfi/binom_p.hpp"
#include "gfi/io.hpp"
#include "gfi/mvn.hpp"
#include "gfi/ranef.hpp"
#include "gfi/regions.hpp"
#include "gfi/thread_pool.hpp"

namespace gfi {

namespace {

double sorted_quantile(const std::vector<double>& sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + (h - std::floor(h)) * (sorted[i + 1] - sorted[i]);
}

Interval sorted_central(const std::vector<double>& sorted, double level) {
    const double alpha = 1.0 - level;
    return {sorted_quantile(sorted, alpha / 2.0), sorted_quantile(sorted, 1.0 - alpha / 2.0)};
}

// Collects per-replicate records into stable slots so the output does not
// depend on worker scheduling.
std::vector<CoverageRecord> flatten(std::vector<std::vector<CoverageRecord>> slots) {
    std::vector<CoverageRecord> out;
    std::size_t total = 0;
    for (const auto& s : slots) total += s.size();
    out.reserve(total);
    for (auto& s : slots)
        for (auto& r : s) out.push_back(std::move(r));
    return out;
}

} // namespace

std::string records_to_csv(const std::vector<CoverageRecord>& records) {
    CsvWriter w({"family", "cell", "region", "level", "replicate", "contained", "size"});
    for (const auto& r : records)
        w.row({r.family, r.cell, r.region, format_double(r.level),
               format_int(r.replicate), r.contained ? "1" : "0", format_double(r.size)});
    return w.str();
}

std::vector<CoverageAggregate> aggregate_records(const std::vector<CoverageRecord>& records) {
    struct Acc {
        int count = 0;
        int hits = 0;
        std::vector<double> sizes;
    };
    std::map<std::tuple<std::string, std::string, std::string, double>, Acc> acc;
    for (const auto& r : records) {
        auto& a = acc[{r.family, r.cell, r.region, r.level}];
        ++a.count;
        if (r.contained) ++a.hits;
        a.sizes.push_back(r.size);
    }
    std::vector<CoverageAggregate> out;
    out.reserve(acc.size());
    for (auto& [key, a] : acc) {
        CoverageAggregate g;
        g.family = std::get<0>(key);
        g.cell = std::get<1>(key);
        g.region = std::get<2>(key);
        g.level = std::get<3>(key);
        g.count = a.count;
        g.coverage = static_cast<double>(a.hits) / a.count;
        double mean = 0.0;
        for (const double s : a.sizes) mean += s;
        g.mean_size = mean / a.count;
        std::sort(a.sizes.begin(), a.sizes.end());
        g.median_size = sorted_quantile(a.sizes, 0.5);
        out.push_back(std::move(g));
    }
    return out;
}

std::string aggregate_to_csv(const std::vector<CoverageAggregate>& aggregates) {
    CsvWriter w({"family", "cell", "region", "level", "count", "coverage",
                 "mean_size", "median_size"});
    for (const auto& g : aggregates)
        w.row({g.family, g.cell, g.region, format_double(g.level), format_int(g.count),
               format_double(g.coverage), format_double(g.mean_size),
               format_double(g.median_size)});
    return w.str();
}

// ---------------------------------------------------------------------------
// Simulation helpers

Eigen::MatrixXd simulate_mvn(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                             int n, Rng& rng) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("simulate_mvn: covariance is not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    const auto d = mu.size();
    Eigen::MatrixXd obs(n, d);
    Eigen::VectorXd z(d);
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
        obs.row(i) = (mu + l * z).transpose();
    }
    return obs;
}

Eigen::VectorXd simulate_ranef(const std::vector<int>& group_sizes, double beta0,
                               double sigma_a2, double sigma_e2, Rng& rng) {
    int n = 0;
    for (const int g : group_sizes) n += g;
    Eigen::VectorXd y(n);
    int at = 0;
    const double sa = std::sqrt(sigma_a2);
    const double se = std::sqrt(sigma_e2);
    for (const int g : group_sizes) {
        const double eta = sa * rng.normal();
        for (int j = 0; j < g; ++j) y[at++] = beta0 + eta + se * rng.normal();
    }
    return y;
}

long long simulate_binomial(long long n, double p, Rng& rng) {
    long long c = 0;
    for (long long i = 0; i < n; ++i)
        if (rng.uniform() <= p) ++c;
    return c;
}

void standard_mvn_truth(Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) {
    mu.resize(4);
    mu << 1, 2, 3, 1;
    sigma.resize(4, 4);
    sigma << 4, 1, 0, 0,
             1, 1, 0, 1,
             0, 0, 9, 1,
             0, 1, 1, 4;
}

std::vector<std::vector<int>> default_ranef_patterns() {
    return {{1, 1, 1, 1, 1, 100},
            {2, 2, 2, 2, 2, 100},
            {2, 5, 60},
            {4, 4, 4, 8, 48},
            {5, 10, 15, 20, 25, 30},
            {2, 2, 4, 6},
            {6, 6, 8, 8, 10, 10}};
}

std::vector<std::pair<double, double>> default_variance_pairs() {
    return {{0.1, 10.0}, {0.5, 10.0}, {1.0, 10.0}, {0.5, 2.0},
            {1.0, 1.0},  {2.0, 0.5},  {5.0, 0.2},  {10.0, 0.1}};
}

// ---------------------------------------------------------------------------
// Multivariate normal study

std::vector<CoverageRecord> run_mvn_study(const MvnStudyConfig& cfg) {
    Eigen::VectorXd mu0 = cfg.mu;
    Eigen::MatrixXd sigma0 = cfg.sigma;
    if (mu0.size() == 0) standard_mvn_truth(mu0, sigma0);
    if (sigma0.rows() != mu0.size() || sigma0.cols() != mu0.size())
        throw std::invalid_argument("run_mvn_study: truth dimensions disagree");
    if (cfg.replicates < 1) throw std::invalid_argument("run_mvn_study: replicates >= 1");

    const std::string cell =
        "d=" + std::to_string(mu0.size()) + ";n=" + std::to_string(cfg.n_obs);
    std::vector<std::vector<CoverageRecord>> slots(static_cast<std::size_t>(cfg.replicates));

    parallel_for(cfg.replicates, [&](int rep) {
        Rng rng(cfg.seed + static_cast<std::uint64_t>(rep));
        const Eigen::MatrixXd obs = simulate_mvn(mu0, sigma0, cfg.n_obs, rng);

        MvnChainConfig chain_cfg;
        chain_cfg.chains = cfg.chains;
        chain_cfg.iterations = cfg.iterations;
        chain_cfg.burn_in = cfg.burn_in;
        chain_cfg.seed = rng.next_u64();
        const MvnRun run = run_chains(MvnData::from_observations(obs), chain_cfg);

        std::vector<Eigen::MatrixXd> covs;
        std::vector<Eigen::MatrixXd> mus;
        covs.reserve(run.draws.size());
        mus.reserve(run.draws.size());
        for (const auto& d : run.draws) {
            covs.push_back(d.cov);
            mus.push_back(d.mu);
        }

        auto& recs = slots[static_cast<std::size_t>(rep)];
        auto ball = [&](const std::string& region, const std::vector<Eigen::MatrixXd>& draws,
                        const Eigen::MatrixXd& truth, const MatrixMetric& metric) {
            Eigen::MatrixXd center =
                Eigen::MatrixXd::Zero(draws.front().rows(), draws.front().cols());
            for (const auto& m : draws) center += m;
            center /= static_cast<double>(draws.size());
            std::vector<double> dist;
            dist.reserve(draws.size());
            for (const auto& m : draws) dist.push_back(metric(m, center));
            std::sort(dist.begin(), dist.end());
            const double dt = metric(truth, center);
            for (const double level : cfg.levels) {
                const double radius = sorted_quantile(dist, level);
                recs.push_back({"mvn", cell, region, level, rep, dt <= radius, radius});
            }
        };
        auto central = [&](const std::string& region, std::vector<double> values,
                           double truth) {
            std::sort(values.begin(), values.end());
            for (const double level : cfg.levels) {
                const Interval iv = sorted_central(values, level);
                recs.push_back({"mvn", cell, region, level, rep, iv.contains(truth),
                                iv.hi - iv.lo});
            }
        };

        ball("cov_fm_ball", covs, sigma0, fm_distance);
        ball("cov_stein_ball", covs, sigma0, stein_loss);
        ball("cov_spectral_ball", covs, sigma0,
             [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
                 return spectral_norm(a - b);
             });
        ball("cov_frobenius_ball", covs, sigma0,
             [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
                 return frobenius_norm(a - b);
             });

        std::vector<double> lds, specs, frobs;
        lds.reserve(covs.size());
        specs.reserve(covs.size());
        frobs.reserve(covs.size());
        for (const auto& m : covs) {
            lds.push_back(log_det(m));
            specs.push_back(spectral_norm(m));
            frobs.push_back(frobenius_norm(m));
        }
        central("cov_logdet_interval", std::move(lds), log_det(sigma0));
        central("cov_spectral_interval", std::move(specs), spectral_norm(sigma0));
        central("cov_frobenius_interval", std::move(frobs), frobenius_norm(sigma0));

        ball("mu_euclidean_ball", mus, mu0,
             [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
                 return (a - b).norm();
             });
    }, cfg.max_workers);

    return flatten(std::move(slots));
}

// ---------------------------------------------------------------------------
// Random-effect study

std::vector<CoverageRecord> run_ranef_study(const RanefStudyConfig& cfg) {
    const auto patterns = cfg.patterns.empty() ? default_ranef_patterns() : cfg.patterns;
    const auto pairs =
        cfg.variance_pairs.empty() ? default_variance_pairs() : cfg.variance_pairs;
    if (cfg.replicates < 1) throw std::invalid_argument("run_ranef_study: replicates >= 1");

    struct Cell {
        int pattern_id;
        const std::vector<int>* sizes;
        double sa2;
        double se2;
        std::string tag;
    };
    std::vector<Cell> cells;
    for (std::size_t pi = 0; pi < patterns.size(); ++pi)
        for (const auto& [sa2, se2] : pairs)
            cells.push_back({static_cast<int>(pi + 1), &patterns[pi], sa2, se2,
                             "pattern=" + std::to_string(pi + 1) +
                                 ";sa2=" + format_double(sa2) + ";se2=" + format_double(se2)});

    const int total = static_cast<int>(cells.size()) * cfg.replicates;
    std::vector<std::vector<CoverageRecord>> slots(static_cast<std::size_t>(total));

    parallel_for(total, [&](int job) {
        const auto& cell = cells[static_cast<std::size_t>(job / cfg.replicates)];
        const int rep = job % cfg.replicates;
        Rng rng(cfg.seed + static_cast<std::uint64_t>(job));
        const Eigen::VectorXd y =
            simulate_ranef(*cell.sizes, cfg.beta0, cell.sa2, cell.se2, rng);

        ReModel model;
        model.group_sizes = *cell.sizes;
        ReChainConfig chain_cfg;
        chain_cfg.iterations = cfg.iterations;
        chain_cfg.burn_in = cfg.burn_in;
        chain_cfg.seed = rng.next_u64();
        const ReRun run = re_sample(y, model, chain_cfg);

        std::vector<double> sa2s, se2s;
        sa2s.reserve(run.draws.size());
        se2s.reserve(run.draws.size());
        for (const auto& d : run.draws) {
            sa2s.push_back(d.sigma_a2);
            se2s.push_back(d.sigma_e2);
        }
        std::sort(sa2s.begin(), sa2s.end());
        std::sort(se2s.begin(), se2s.end());

        auto& recs = slots[static_cast<std::size_t>(job)];
        for (const double level : cfg.levels) {
            const Interval ia = sorted_central(sa2s, level);
            const Interval ie = sorted_central(se2s, level);
            recs.push_back({"ranef", cell.tag, "sigma_alpha2", level, rep,
                            ia.contains(cell.sa2), ia.hi - ia.lo});
            recs.push_back({"ranef", cell.tag, "sigma_e2", level, rep,
                            ie.contains(cell.se2), ie.hi - ie.lo});
        }
    }, cfg.max_workers);

    return flatten(std::move(slots));
}

// ---------------------------------------------------------------------------
// Pooled-p study

std::vector<CoverageRecord> run_binom_p_study(const BinomPStudyConfig& cfg) {
    if (cfg.replicates < 1) throw std::invalid_argument("run_binom_p_study: replicates >= 1");
    const int total = static_cast<int>(cfg.p_values.size()) * cfg.replicates;
    std::vector<std::vector<CoverageRecord>> slots(static_cast<std::size_t>(total));

    parallel_for(total, [&](int job) {
        const double p0 = cfg.p_values[static_cast<std::size_t>(job / cfg.replicates)];
        const int rep = job % cfg.replicates;
        Rng rng(cfg.seed + static_cast<std::uint64_t>(job));

        BinPModel model;
        model.trials = cfg.trials;
        model.counts.resize(static_cast<std::size_t>(cfg.m));
        for (auto& c : model.counts) c = simulate_binomial(cfg.trials, p0, rng);

        const std::string cell = "trials=" + std::to_string(cfg.trials) +
                                 ";m=" + std::to_string(cfg.m) + ";p=" + format_double(p0);
        auto& recs = slots[static_cast<std::size_t>(job)];
        for (const PConvention conv : {PConvention::Arithmetic, PConvention::Geometric}) {
            std::vector<double> draws = gfd_sample_p(model, conv, cfg.draws, rng);
            std::sort(draws.begin(), draws.end());
            const std::string region = conv == PConvention::Arithmetic
                                           ? "p_arithmetic_interval"
                                           : "p_geometric_interval";
            for (const double level : cfg.levels) {
                const Interval iv = sorted_central(draws, level);
                recs.push_back({"binom_p", cell, region, level, rep, iv.contains(p0),
                                iv.hi - iv.lo});
            }
        }
    }, cfg.max_workers);

    return flatten(std::move(slots));
}

// ---------------------------------------------------------------------------
// Unknown-n study

std::vector<CoverageRecord> run_binom_n_study(const BinomNStudyConfig& cfg) {
    if (cfg.replicates < 1) throw std::invalid_argument("run_binom_n_study: replicates >= 1");
    const int total = static_cast<int>(cfg.p_values.size()) * cfg.replicates;
    std::vector<std::vector<CoverageRecord>> slots(static_cast<std::size_t>(total));

    parallel_for(total, [&](int job) {
        const double p = cfg.p_values[static_cast<std::size_t>(job / cfg.replicates)];
        const int rep = job % cfg.replicates;
        Rng rng(cfg.seed + static_cast<std::uint64_t>(job));

        std::vector<long long> y(static_cast<std::size_t>(cfg.m));
        for (auto& v : y) v = simulate_binomial(cfg.n0, p, rng);

        const std::string cell = "n0=" + std::to_string(cfg.n0) +
                                 ";m=" + std::to_string(cfg.m) + ";p=" + format_double(p);
        auto& recs = slots[static_cast<std::size_t>(job)];

        const IntegerInterval range = candidate_range(y, p, cfg.eps1);
        const MassAssignment masses = ds_masses(range, y, p);
        const std::vector<double> pmf = endpoint_pmf(masses);

        for (const double level : cfg.levels) {
            const IntegerInterval iv = upper_interval(pmf, range.lo, level);
            recs.push_back({"binom_n", cell, "upper_interval", level, rep,
                            iv.lo <= cfg.n0 && cfg.n0 <= iv.hi,
                            static_cast<double>(iv.length())});
        }

        const std::vector<long long> fid = sample_n(masses, cfg.mad_draws, rng);
        double mad_fid = 0.0;
        for (const long long n : fid) mad_fid += std::fabs(static_cast<double>(n - cfg.n0));
        mad_fid /= static_cast<double>(fid.size());

        const std::vector<double> post = bayes_posterior_n(y, p, range);
        std::vector<double> cum(post.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < post.size(); ++i) {
            acc += post[i];
            cum[i] = acc;
        }
        double mad_bayes = 0.0;
        for (int k = 0; k < cfg.mad_draws; ++k) {
            const double u = rng.uniform() * acc;
            const auto it = std::lower_bound(cum.begin(), cum.end(), u);
            const long long n = range.lo + static_cast<long long>(it - cum.begin());
            mad_bayes += std::fabs(static_cast<double>(n - cfg.n0));
        }
        mad_bayes /= static_cast<double>(cfg.mad_draws);

        recs.push_back({"binom_n", cell, "mad_fid", 0.0, rep, true, mad_fid});
        recs.push_back({"binom_n", cell, "mad_bayes", 0.0, rep, true, mad_bayes});
    }, cfg.max_workers);

    return flatten(std::move(slots));
}

// ---------------------------------------------------------------------------
// Joint (n, mu) study

std::vector<CoverageRecord> run_binom_np_study(const BinomNpStudyConfig& cfg) {
    if (cfg.replicates < 1) throw std::invalid_argument("run_binom_np_study: replicates >= 1");
    const int total = static_cast<int>(cfg.cells.size()) * cfg.replicates;
    std::vector<std::vector<CoverageRecord>> slots(static_cast<std::size_t>(total));

    parallel_for(total, [&](int job) {
        const auto [n0, p0] = cfg.cells[static_cast<std::size_t>(job / cfg.replicates)];
        const int rep = job % cfg.replicates;
        Rng rng(cfg.seed + static_cast<std::uint64_t>(job));

        std::vector<long long> y(static_cast<std::size_t>(cfg.m));
        for (auto& v : y) v = simulate_binomial(n0, p0, rng);

        NpSamplerConfig np_cfg;
        np_cfg.eps2 = cfg.eps2;
        np_cfg.iterations = cfg.iterations;
        np_cfg.burn_in = cfg.burn_in;
        np_cfg.thin = cfg.thin;
        np_cfg.seed = rng.next_u64();
        const NpSummaryRun run = run_np_summaries(y, np_cfg);

        const double mu0 = static_cast<double>(n0) * p0;
        const std::string cell = "n0=" + std::to_string(n0) + ";p=" + format_double(p0) +
                                 ";m=" + std::to_string(cfg.m);
        auto& recs = slots[static_cast<std::size_t>(job)];

        std::vector<double> rep_n, rep_mu;
        rep_n.reserve(run.draws.size());
        rep_mu.reserve(run.draws.size());
        int unbounded = 0;
        for (const auto& d : run.draws) {
            rep_n.push_back(static_cast<double>(d.rep_n));
            rep_mu.push_back(d.rep_mu);
            if (d.unbounded) ++unbounded;
        }
        std::vector<double> rep_n_sorted = rep_n;
        std::vector<double> rep_mu_sorted = rep_mu;
        std::sort(rep_n_sorted.begin(), rep_n_sorted.end());
        std::sort(rep_mu_sorted.begin(), rep_mu_sorted.end());

        for (const double level : cfg.levels) {
            const NpBoxPair boxes = np_boxes(run.draws, level);
            recs.push_back({"binom_np", cell, "belief_box", level, rep,
                            boxes.belief.contains(static_cast<double>(n0), mu0),
                            boxes.belief.unbounded
                                ? std::numeric_limits<double>::infinity()
                                : boxes.belief.n_hi - boxes.belief.n_lo});
            recs.push_back({"binom_np", cell, "plaus_box", level, rep,
                            boxes.plaus.contains(static_cast<double>(n0), mu0),
                            boxes.plaus.n_hi - boxes.plaus.n_lo});
            const Interval in = sorted_central(rep_n_sorted, level);
            const Interval imu = sorted_central(rep_mu_sorted, level);
            recs.push_back({"binom_np", cell, "n_interval", level, rep,
                            in.contains(static_cast<double>(n0)), in.hi - in.lo});
            recs.push_back({"binom_np", cell, "mu_interval", level, rep,
                            imu.contains(mu0), imu.hi - imu.lo});
        }
        recs.push_back({"binom_np", cell, "unbounded_fraction", 0.0, rep, true,
                        static_cast<double>(unbounded) /
                            static_cast<double>(run.draws.size())});
    }, cfg.max_workers);

    return flatten(std::move(slots));
}

// ---------------------------------------------------------------------------
// JSON entry point

namespace {

using nlohmann::json;

std::vector<double> levels_from(const json& j, const std::vector<double>& fallback) {
    if (!j.contains("levels")) return fallback;
    return j.at("levels").get<std::vector<double>>();
}

} // namespace

std::string run_study_json(const std::string& json_text, std::uint64_t seed_override,
                           const std::string& out_override, std::ostream& diag) {
    const json j = json::parse(json_text);
    const std::string family = j.at("family").get<std::string>();

    std::vector<CoverageRecord> records;
    if (family == "mvn") {
        MvnStudyConfig cfg;
        if (j.contains("mu")) {
            const auto mu = j.at("mu").get<std::vector<double>>();
            const auto sig = j.at("sigma").get<std::vector<std::vector<double>>>();
            cfg.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(),
                                                       static_cast<Eigen::Index>(mu.size()));
            cfg.sigma.resize(static_cast<Eigen::Index>(sig.size()),
                             static_cast<Eigen::Index>(sig.size()));
            for (std::size_t r = 0; r < sig.size(); ++r) {
                if (sig[r].size() != sig.size())
                    throw std::invalid_argument("study: sigma must be square");
                for (std::size_t c = 0; c < sig[r].size(); ++c)
                    cfg.sigma(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        sig[r][c];
            }
        }
        cfg.n_obs = j.value("n_obs", cfg.n_obs);
        cfg.replicates = j.value("replicates", cfg.replicates);
        cfg.levels = levels_from(j, cfg.levels);
        cfg.chains = j.value("chains", cfg.chains);
        cfg.iterations = j.value("iterations", cfg.iterations);
        cfg.burn_in = j.value("burn_in", cfg.burn_in);
        cfg.seed = j.value("seed", cfg.seed);
        if (seed_override) cfg.seed = seed_override;
        diag << "study family=mvn replicates=" << cfg.replicates << "\n";
        records = run_mvn_study(cfg);
    } else if (family == "ranef") {
        RanefStudyConfig cfg;
        if (j.contains("patterns"))
            cfg.patterns = j.at("patterns").get<std::vector<std::vector<int>>>();
        if (j.contains("variance_pairs"))
            for (const auto& pr : j.at("variance_pairs"))
                cfg.variance_pairs.emplace_back(pr.at(0).get<double>(), pr.at(1).get<double>());
        cfg.beta0 = j.value("beta0", cfg.beta0);
        cfg.replicates = j.value("replicates", cfg.replicates);
        cfg.levels = levels_from(j, cfg.levels);
        cfg.iterations = j.value("iterations", cfg.iterations);
        cfg.burn_in = j.value("burn_in", cfg.burn_in);
        cfg.seed = j.value("seed", cfg.seed);
        if (seed_override) cfg.seed = seed_override;
        diag << "study family=ranef replicates=" << cfg.replicates << " per cell\n";
        records = run_ranef_study(cfg);
    } else if (family == "binom_p") {
        BinomPStudyConfig cfg;
        cfg.trials = j.value("trials", cfg.trials);
        cfg.m = j.value("m", cfg.m);
        if (j.contains("p_values"))
            cfg.p_values = j.at("p_values").get<std::vector<double>>();
        cfg.replicates = j.value("replicates", cfg.replicates);
        cfg.draws = j.value("draws", cfg.draws);
        cfg.levels = levels_from(j, cfg.levels);
        cfg.seed = j.value("seed", cfg.seed);
        if (seed_override) cfg.seed = seed_override;
        diag << "study family=binom_p replicates=" << cfg.replicates << " per cell\n";
        records = run_binom_p_study(cfg);
    } else if (family == "binom_n") {
        BinomNStudyConfig cfg;
        cfg.n0 = j.value("n0", cfg.n0);
        if (j.contains("p_values"))
            cfg.p_values = j.at("p_values").get<std::vector<double>>();
        cfg.m = j.value("m", cfg.m);
        cfg.replicates = j.value("replicates", cfg.replicates);
        cfg.eps1 = j.value("eps1", cfg.eps1);
        cfg.mad_draws = j.value("mad_draws", cfg.mad_draws);
        cfg.levels = levels_from(j, cfg.levels);
        cfg.seed = j.value("seed", cfg.seed);
        if (seed_override) cfg.seed = seed_override;
        diag << "study family=binom_n replicates=" << cfg.replicates << " per cell\n";
        records = run_binom_n_study(cfg);
    } else if (family == "binom_np") {
        BinomNpStudyConfig cfg;
        if (j.contains("cells")) {
            cfg.cells.clear();
            for (const auto& c : j.at("cells"))
                cfg.cells.emplace_back(c.at(0).get<long long>(), c.at(1).get<double>());
        }
        cfg.m = j.value("m", cfg.m);
        cfg.replicates = j.value("replicates", cfg.replicates);
        cfg.eps2 = j.value("eps2", cfg.eps2);
        cfg.iterations = j.value("iterations", cfg.iterations);
        cfg.burn_in = j.value("burn_in", cfg.burn_in);
        cfg.thin = j.value("thin", cfg.thin);
        cfg.levels = levels_from(j, cfg.levels);
        cfg.seed = j.value("seed", cfg.seed);
        if (seed_override) cfg.seed = seed_override;
        diag << "study family=binom_np replicates=" << cfg.replicates << " per cell\n";
        records = run_binom_np_study(cfg);
    } else {
        throw std::invalid_argument("study: unknown family '" + family + "'");
    }

    std::string records_path = j.value("out", family + "_records.csv");
    if (!out_override.empty()) records_path = out_override;
    std::string summary_path = j.value("summary_out", std::string());
    if (summary_path.empty()) summary_path = records_path + ".summary.csv";

    {
        std::ofstream out(records_path, std::ios::binary);
        if (!out) throw std::runtime_error("study: cannot write " + records_path);
        out << records_to_csv(records);
    }
    {
        std::ofstream out(summary_path, std::ios::binary);
        if (!out) throw std::runtime_error("study: cannot write " + summary_path);
        out << aggregate_to_csv(aggregate_records(records));
    }
    diag << "wrote " << records_path << " (" << records.size() << " records)\n";
    diag << "wrote " << summary_path << "\n";
    return records_path;
}

} // namespace gfi
