#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gfi/binom_n.hpp"
#include "gfi/binom_np.hpp"
#include "gfi/binom_p.hpp"
#include "gfi/io.hpp"
#include "gfi/mvn.hpp"
#include "gfi/ranef.hpp"
#include "gfi/regions.hpp"
#include "gfi/studies.hpp"

namespace {

using Cell = std::variant<long long, double, std::string, bool>;

// Draw/record table emitted either as CSV or as a JSON array of objects.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void row(std::vector<Cell> cells) { rows.push_back(std::move(cells)); }

    std::string to_csv() const {
        gfi::CsvWriter w(columns);
        std::vector<std::string> cells;
        for (const auto& r : rows) {
            cells.clear();
            for (const auto& c : r) {
                if (std::holds_alternative<long long>(c))
                    cells.push_back(gfi::format_int(std::get<long long>(c)));
                else if (std::holds_alternative<double>(c))
                    cells.push_back(gfi::format_double(std::get<double>(c)));
                else if (std::holds_alternative<bool>(c))
                    cells.push_back(std::get<bool>(c) ? "1" : "0");
                else
                    cells.push_back(std::get<std::string>(c));
            }
            w.row(cells);
        }
        return w.str();
    }

    std::string to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json obj;
            for (std::size_t i = 0; i < columns.size(); ++i) {
                const auto& c = r[i];
                if (std::holds_alternative<long long>(c))
                    obj[columns[i]] = std::get<long long>(c);
                else if (std::holds_alternative<double>(c))
                    obj[columns[i]] = std::get<double>(c);
                else if (std::holds_alternative<bool>(c))
                    obj[columns[i]] = std::get<bool>(c);
                else
                    obj[columns[i]] = std::get<std::string>(c);
            }
            arr.push_back(std::move(obj));
        }
        return arr.dump(2) + "\n";
    }
};

void emit(const Table& t, const std::string& out, const std::string& format) {
    const std::string payload = format == "json" ? t.to_json() : t.to_csv();
    if (out.empty()) {
        std::cout << payload;
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + out);
        f << payload;
        std::cerr << "wrote " << out << "\n";
    }
}

std::vector<long long> read_counts(const std::string& path) {
    const gfi::NumericCsv csv = gfi::read_numeric_csv(path);
    if (csv.columns.empty()) throw std::runtime_error("counts csv: no columns");
    int col = csv.column("count");
    if (col < 0) col = 0;
    std::vector<long long> y;
    y.reserve(csv.rows.size());
    for (const auto& r : csv.rows) y.push_back(std::llround(r[static_cast<std::size_t>(col)]));
    if (y.empty()) throw std::runtime_error("counts csv: no rows");
    return y;
}

std::vector<int> parse_pattern(const std::string& text) {
    std::vector<int> sizes;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const int v = std::stoi(tok);
        if (v < 1) throw std::runtime_error("pattern entries must be >= 1");
        sizes.push_back(v);
    }
    if (sizes.empty()) throw std::runtime_error("empty pattern");
    return sizes;
}

std::string file_contents(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommonOpts {
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";
    double level = 0.95;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--out", o.out, "Output file for the draw/record table (default: stdout)");
    sub->add_option("--format", o.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--level", o.level, "Nominal level for printed intervals")
        ->check(CLI::Range(0.0, 1.0));
}

int run_mvn_sample(const std::string& data, int sim_n, int sim_d, int chains, int iters,
                   int burn_in, const CommonOpts& o) {
    Eigen::MatrixXd obs;
    if (!data.empty()) {
        const gfi::NumericCsv csv = gfi::read_numeric_csv(data);
        if (csv.rows.empty()) throw std::runtime_error("mvn csv: no rows");
        obs.resize(static_cast<Eigen::Index>(csv.rows.size()),
                   static_cast<Eigen::Index>(csv.columns.size()));
        for (std::size_t r = 0; r < csv.rows.size(); ++r)
            for (std::size_t c = 0; c < csv.columns.size(); ++c)
                obs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = csv.rows[r][c];
    } else {
        gfi::Rng rng(o.seed + 0x5151);
        Eigen::VectorXd mu;
        Eigen::MatrixXd sigma;
        if (sim_d == 4) {
            gfi::standard_mvn_truth(mu, sigma);
        } else {
            mu = Eigen::VectorXd::Zero(sim_d);
            sigma = Eigen::MatrixXd::Identity(sim_d, sim_d);
        }
        obs = gfi::simulate_mvn(mu, sigma, sim_n, rng);
        std::cerr << "simulated " << sim_n << " observations in dimension " << sim_d << "\n";
    }

    gfi::MvnChainConfig cfg;
    cfg.chains = chains;
    cfg.iterations = iters;
    cfg.burn_in = burn_in;
    cfg.seed = o.seed;
    const gfi::MvnRun run = gfi::run_chains(gfi::MvnData::from_observations(obs), cfg);
    for (std::size_t k = 0; k < run.acceptance.size(); ++k)
        std::cerr << "chain " << k << " acceptance " << gfi::format_double(run.acceptance[k])
                  << "\n";

    const int d = static_cast<int>(obs.cols());
    Table t;
    t.columns.push_back("chain");
    for (int j = 0; j < d; ++j) t.columns.push_back("mu_" + std::to_string(j + 1));
    for (int j = 0; j < d; ++j) t.columns.push_back("lambda_" + std::to_string(j + 1));
    for (int k = 0; k < d - 1; ++k)
        for (int j = k + 1; j < d; ++j)
            t.columns.push_back("a_" + std::to_string(j + 1) + std::to_string(k + 1));
    for (const auto& dr : run.draws) {
        std::vector<Cell> cells;
        cells.emplace_back(static_cast<long long>(dr.chain));
        for (int j = 0; j < d; ++j) cells.emplace_back(dr.mu[j]);
        for (int j = 0; j < d; ++j) cells.emplace_back(dr.lambda[j]);
        for (Eigen::Index j = 0; j < dr.veck.size(); ++j) cells.emplace_back(dr.veck[j]);
        t.row(std::move(cells));
    }

    for (int j = 0; j < d; ++j) {
        std::vector<double> v;
        v.reserve(run.draws.size());
        for (const auto& dr : run.draws) v.push_back(dr.mu[j]);
        const gfi::Interval iv = gfi::central_interval(v, o.level);
        std::cout << "mu_" << j + 1 << " " << gfi::format_double(o.level)
                  << " interval (" << gfi::format_double(iv.lo) << ", "
                  << gfi::format_double(iv.hi) << ")\n";
    }
    emit(t, o.out, o.format);
    return 0;
}

int run_ranef_sample(const std::string& data, const std::string& sim_pattern, double sim_sa2,
                     double sim_se2, double sim_beta, int iters, int burn_in,
                     const CommonOpts& o) {
    Eigen::VectorXd y;
    std::vector<int> sizes;
    if (!data.empty()) {
        const gfi::NumericCsv csv = gfi::read_numeric_csv(data);
        const int yc = csv.column("y");
        const int gc = csv.column("group");
        if (yc < 0 || gc < 0) throw std::runtime_error("ranef csv needs columns y,group");
        // Stable-sort rows by group label so groups form contiguous blocks.
        std::vector<std::size_t> order(csv.rows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return csv.rows[a][static_cast<std::size_t>(gc)] <
                   csv.rows[b][static_cast<std::size_t>(gc)];
        });
        y.resize(static_cast<Eigen::Index>(order.size()));
        double cur = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < order.size(); ++i) {
            const auto& r = csv.rows[order[i]];
            y[static_cast<Eigen::Index>(i)] = r[static_cast<std::size_t>(yc)];
            const double g = r[static_cast<std::size_t>(gc)];
            if (i == 0 || g != cur) {
                sizes.push_back(1);
                cur = g;
            } else {
                ++sizes.back();
            }
        }
    } else {
        if (sim_pattern.empty())
            throw std::runtime_error("ranef-sample needs --data or --sim-pattern");
        sizes = parse_pattern(sim_pattern);
        gfi::Rng rng(o.seed + 0x5151);
        y = gfi::simulate_ranef(sizes, sim_beta, sim_sa2, sim_se2, rng);
        std::cerr << "simulated " << y.size() << " observations in " << sizes.size()
                  << " groups\n";
    }

    gfi::ReModel model;
    model.group_sizes = sizes;
    gfi::ReChainConfig cfg;
    cfg.iterations = iters;
    cfg.burn_in = burn_in;
    cfg.seed = o.seed;
    const gfi::ReRun run = gfi::re_sample(y, model, cfg);
    std::cerr << "acceptance " << gfi::format_double(run.acceptance) << "\n";

    const auto q = run.draws.front().beta.size();
    Table t;
    for (Eigen::Index j = 0; j < q; ++j)
        t.columns.push_back("beta_" + std::to_string(j + 1));
    t.columns.push_back("sigma_a2");
    t.columns.push_back("sigma_e2");
    std::vector<double> sa2s, se2s;
    for (const auto& dr : run.draws) {
        std::vector<Cell> cells;
        for (Eigen::Index j = 0; j < q; ++j) cells.emplace_back(dr.beta[j]);
        cells.emplace_back(dr.sigma_a2);
        cells.emplace_back(dr.sigma_e2);
        t.row(std::move(cells));
        sa2s.push_back(dr.sigma_a2);
        se2s.push_back(dr.sigma_e2);
    }
    const gfi::Interval ia = gfi::central_interval(sa2s, o.level);
    const gfi::Interval ie = gfi::central_interval(se2s, o.level);
    std::cout << "sigma_a2 " << gfi::format_double(o.level) << " interval ("
              << gfi::format_double(ia.lo) << ", " << gfi::format_double(ia.hi) << ")\n";
    std::cout << "sigma_e2 " << gfi::format_double(o.level) << " interval ("
              << gfi::format_double(ie.lo) << ", " << gfi::format_double(ie.hi) << ")\n";
    emit(t, o.out, o.format);
    return 0;
}

int run_binom_p(long long n, const std::string& data, int sim_m, double sim_p,
                const std::string& convention, int draws, const CommonOpts& o) {
    gfi::BinPModel model;
    model.trials = n;
    gfi::Rng rng(o.seed);
    if (!data.empty()) {
        model.counts = read_counts(data);
    } else {
        if (sim_m < 1) throw std::runtime_error("binom-p needs --data or --sim-m/--sim-p");
        model.counts.resize(static_cast<std::size_t>(sim_m));
        gfi::Rng sim_rng(o.seed + 0x5151);
        for (auto& c : model.counts) c = gfi::simulate_binomial(n, sim_p, sim_rng);
        std::cerr << "simulated " << sim_m << " counts\n";
    }
    const gfi::PConvention conv = convention == "geometric" ? gfi::PConvention::Geometric
                                                            : gfi::PConvention::Arithmetic;
    const std::vector<double> ps = gfi::gfd_sample_p(model, conv, draws, rng);
    const gfi::Interval iv = gfi::central_interval(ps, o.level);
    std::cout << "p " << gfi::format_double(o.level) << " interval ("
              << gfi::format_double(iv.lo) << ", " << gfi::format_double(iv.hi) << ")\n";

    Table t;
    t.columns = {"p"};
    for (const double p : ps) t.row({p});
    emit(t, o.out, o.format);
    return 0;
}

int run_binom_n(double p, const std::string& data, long long sim_n0, int sim_m, double eps1,
                const CommonOpts& o) {
    std::vector<long long> y;
    if (!data.empty()) {
        y = read_counts(data);
    } else {
        if (sim_m < 1) throw std::runtime_error("binom-n needs --data or --sim-n0/--sim-m");
        gfi::Rng sim_rng(o.seed + 0x5151);
        y.resize(static_cast<std::size_t>(sim_m));
        for (auto& v : y) v = gfi::simulate_binomial(sim_n0, p, sim_rng);
        std::cerr << "simulated " << sim_m << " counts\n";
    }

    const gfi::IntegerInterval range = gfi::candidate_range(y, p, eps1);
    const gfi::MassAssignment masses = gfi::ds_masses(range, y, p);
    std::cerr << "candidate range [" << range.lo << ", " << range.hi << "]\n";

    Table t;
    t.columns = {"kind", "lo", "hi", "mass"};
    const long long k = range.length();
    for (long long a = 0; a < k; ++a) {
        for (long long b = a; b < k; ++b) {
            const double m = masses.mass[masses.interval_index(range.lo + a, range.lo + b)];
            if (m <= 0.0) continue;
            t.row({std::string("interval"), range.lo + a, range.lo + b, m});
        }
    }
    if (masses.empty_mass > 0.0)
        t.row({std::string("empty"), 0LL, -1LL, masses.empty_mass});

    const std::vector<double> pmf = gfi::endpoint_pmf(masses);
    const gfi::IntegerInterval iv = gfi::upper_interval(pmf, range.lo, o.level);
    std::cout << "n " << gfi::format_double(o.level) << " upper set {" << iv.lo << ", ..., "
              << iv.hi << "}\n";
    emit(t, o.out, o.format);
    return 0;
}

int run_binom_np(const std::string& data, long long sim_n0, double sim_p, int sim_m,
                 double eps2, int iters, int burn_in, int thin, const CommonOpts& o) {
    std::vector<long long> y;
    if (!data.empty()) {
        y = read_counts(data);
    } else {
        if (sim_m < 1) throw std::runtime_error("binom-np needs --data or --sim-n0/--sim-p/--sim-m");
        gfi::Rng sim_rng(o.seed + 0x5151);
        y.resize(static_cast<std::size_t>(sim_m));
        for (auto& v : y) v = gfi::simulate_binomial(sim_n0, sim_p, sim_rng);
        std::cerr << "simulated " << sim_m << " counts\n";
    }

    gfi::NpSamplerConfig cfg;
    cfg.eps2 = eps2;
    cfg.iterations = iters;
    cfg.burn_in = burn_in;
    cfg.thin = thin;
    cfg.seed = o.seed;
    const gfi::NpSummaryRun run = gfi::run_np_summaries(y, cfg);
    std::cerr << "mu acceptance " << gfi::format_double(run.mu_acceptance)
              << ", n acceptance " << gfi::format_double(run.n_acceptance)
              << ", gibbs fallbacks " << run.gibbs_fallbacks << "\n";

    Table t;
    t.columns = {"draw", "n_min", "mu_lo_at_min", "mu_hi_at_min", "unbounded", "n_last",
                 "mu_min", "mu_max", "tail_mu_lo", "tail_mu_hi", "rep_n", "rep_mu",
                 "rep_censored"};
    for (std::size_t i = 0; i < run.draws.size(); ++i) {
        const auto& d = run.draws[i];
        t.row({static_cast<long long>(i), d.n_min, d.mu_lo_at_min, d.mu_hi_at_min,
               d.unbounded, d.n_last, d.mu_min, d.mu_max, d.tail_mu_lo, d.tail_mu_hi,
               d.rep_n, d.rep_mu, d.rep_censored});
    }

    const gfi::NpBoxPair boxes = gfi::np_boxes(run.draws, o.level);
    std::cout << "belief box n [" << gfi::format_double(boxes.belief.n_lo) << ", "
              << (boxes.belief.unbounded ? std::string("inf")
                                         : gfi::format_double(boxes.belief.n_hi))
              << "] mu [" << gfi::format_double(boxes.belief.mu_lo) << ", "
              << gfi::format_double(boxes.belief.mu_hi) << "]\n";
    std::cout << "plausibility box n [" << gfi::format_double(boxes.plaus.n_lo) << ", "
              << gfi::format_double(boxes.plaus.n_hi) << "] mu ["
              << gfi::format_double(boxes.plaus.mu_lo) << ", "
              << gfi::format_double(boxes.plaus.mu_hi) << "]\n";
    emit(t, o.out, o.format);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized fiducial inference toolkit"};
    app.require_subcommand(1);

    // mvn-sample
    auto* mvn = app.add_subcommand("mvn-sample",
                                   "Sample the fiducial posterior of a multivariate normal");
    std::string mvn_data;
    int mvn_sim_n = 100, mvn_sim_d = 4, mvn_chains = 2, mvn_iters = 5000, mvn_burn = 1000;
    CommonOpts mvn_o;
    mvn->add_option("--data", mvn_data, "CSV of observations (one row each, d columns)");
    mvn->add_option("--sim-n", mvn_sim_n, "Simulated sample size when no --data");
    mvn->add_option("--sim-d", mvn_sim_d, "Simulated dimension when no --data")
        ->check(CLI::Range(1, 12));
    mvn->add_option("--chains", mvn_chains, "Number of chains")->check(CLI::PositiveNumber);
    mvn->add_option("--iters", mvn_iters, "Iterations per chain (incl. burn-in)");
    mvn->add_option("--burn-in", mvn_burn, "Burn-in iterations");
    add_common(mvn, mvn_o);

    // ranef-sample
    auto* ran = app.add_subcommand("ranef-sample",
                                   "Sample the fiducial posterior of a grouped random-effect model");
    std::string ran_data, ran_pattern;
    double ran_sa2 = 1.0, ran_se2 = 1.0, ran_beta = 1.0;
    int ran_iters = 5000, ran_burn = 1000;
    CommonOpts ran_o;
    ran->add_option("--data", ran_data, "CSV with columns y,group");
    ran->add_option("--sim-pattern", ran_pattern, "Comma-separated group sizes to simulate");
    ran->add_option("--sim-sa2", ran_sa2, "Simulated group-effect variance");
    ran->add_option("--sim-se2", ran_se2, "Simulated noise variance");
    ran->add_option("--sim-beta", ran_beta, "Simulated intercept");
    ran->add_option("--iters", ran_iters, "Iterations (incl. burn-in)");
    ran->add_option("--burn-in", ran_burn, "Burn-in iterations");
    add_common(ran, ran_o);

    // binom-p
    auto* bp = app.add_subcommand("binom-p", "Fiducial inference for a binomial success rate");
    long long bp_n = 0;
    std::string bp_data, bp_conv = "arithmetic";
    int bp_sim_m = 0, bp_draws = 5000;
    double bp_sim_p = 0.5;
    CommonOpts bp_o;
    bp->add_option("--n", bp_n, "Trials per observation")->required()->check(CLI::PositiveNumber);
    bp->add_option("--data", bp_data, "CSV with a count column");
    bp->add_option("--sim-m", bp_sim_m, "Simulated number of observations when no --data");
    bp->add_option("--sim-p", bp_sim_p, "Simulated success probability");
    bp->add_option("--convention", bp_conv, "Half-sample convention")
        ->check(CLI::IsMember({"arithmetic", "geometric"}));
    bp->add_option("--draws", bp_draws, "Number of fiducial draws")->check(CLI::PositiveNumber);
    add_common(bp, bp_o);

    // binom-n
    auto* bn = app.add_subcommand("binom-n",
                                  "Fiducial mass function for a binomial trial count, known p");
    double bn_p = 0.5, bn_eps1 = 1e-8;
    std::string bn_data;
    long long bn_sim_n0 = 10;
    int bn_sim_m = 0;
    CommonOpts bn_o;
    bn->add_option("--p", bn_p, "Known success probability")->required()
        ->check(CLI::Range(0.0, 1.0));
    bn->add_option("--data", bn_data, "CSV with a count column");
    bn->add_option("--sim-n0", bn_sim_n0, "Simulated true trial count");
    bn->add_option("--sim-m", bn_sim_m, "Simulated number of observations when no --data");
    bn->add_option("--eps1", bn_eps1, "Candidate-range tail ratio cutoff");
    add_common(bn, bn_o);

    // binom-np
    auto* bnp = app.add_subcommand("binom-np",
                                   "Joint fiducial sampler for binomial (n, mu), both unknown");
    std::string bnp_data;
    long long bnp_sim_n0 = 15;
    double bnp_sim_p = 0.5, bnp_eps2 = 1e-3;
    int bnp_sim_m = 0, bnp_iters = 5000, bnp_burn = 1000, bnp_thin = 1;
    CommonOpts bnp_o;
    bnp->add_option("--data", bnp_data, "CSV with a count column");
    bnp->add_option("--sim-n0", bnp_sim_n0, "Simulated true trial count");
    bnp->add_option("--sim-p", bnp_sim_p, "Simulated success probability");
    bnp->add_option("--sim-m", bnp_sim_m, "Simulated number of observations when no --data");
    bnp->add_option("--eps2", bnp_eps2, "Gamma-limit cut tolerance (mean scale)");
    bnp->add_option("--iters", bnp_iters, "Iterations (incl. burn-in)");
    bnp->add_option("--burn-in", bnp_burn, "Burn-in iterations");
    bnp->add_option("--thin", bnp_thin, "Keep every thin-th post burn-in state");
    add_common(bnp, bnp_o);

    // study
    auto* st = app.add_subcommand("study", "Run a JSON study specification");
    std::string st_file, st_out;
    std::uint64_t st_seed = 0;
    st->add_option("spec", st_file, "Study spec JSON file")->required();
    st->add_option("--seed", st_seed, "Override the document seed");
    st->add_option("--out", st_out, "Override the records output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*mvn)
            return run_mvn_sample(mvn_data, mvn_sim_n, mvn_sim_d, mvn_chains, mvn_iters,
                                  mvn_burn, mvn_o);
        if (*ran)
            return run_ranef_sample(ran_data, ran_pattern, ran_sa2, ran_se2, ran_beta,
                                    ran_iters, ran_burn, ran_o);
        if (*bp)
            return run_binom_p(bp_n, bp_data, bp_sim_m, bp_sim_p, bp_conv, bp_draws, bp_o);
        if (*bn)
            return run_binom_n(bn_p, bn_data, bn_sim_n0, bn_sim_m, bn_eps1, bn_o);
        if (*bnp)
            return run_binom_np(bnp_data, bnp_sim_n0, bnp_sim_p, bnp_sim_m, bnp_eps2,
                                bnp_iters, bnp_burn, bnp_thin, bnp_o);
        if (*st) {
            const std::string path =
                gfi::run_study_json(file_contents(st_file), st_seed, st_out, std::cerr);
            std::cout << "records " << path << "\n";
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
