#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gfi/rng.hpp"

namespace gfi {

// One containment result. Every study emits the same schema, one record per
// (cell x replicate x region x level); scalar per-replicate diagnostics
// (MAD values, unbounded-tail fractions) ride along as level-0 records with
// contained fixed to true and the value in size.
struct CoverageRecord {
    std::string family;
    std::string cell;
    std::string region;
    double level = 0.0;
    int replicate = 0;
    bool contained = false;
    double size = 0.0;   // radius, interval width, or diagnostic value
};

std::string records_to_csv(const std::vector<CoverageRecord>& records);

struct CoverageAggregate {
    std::string family;
    std::string cell;
    std::string region;
    double level = 0.0;
    int count = 0;
    double coverage = 0.0;
    double mean_size = 0.0;
    double median_size = 0.0;
};

std::vector<CoverageAggregate> aggregate_records(const std::vector<CoverageRecord>& records);
std::string aggregate_to_csv(const std::vector<CoverageAggregate>& aggregates);

// Simulation helpers shared by the studies and the CLI.
Eigen::MatrixXd simulate_mvn(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                             int n, Rng& rng);
Eigen::VectorXd simulate_ranef(const std::vector<int>& group_sizes, double beta0,
                               double sigma_a2, double sigma_e2, Rng& rng);
long long simulate_binomial(long long n, double p, Rng& rng);

// The documented four-dimensional study truth.
void standard_mvn_truth(Eigen::VectorXd& mu, Eigen::MatrixXd& sigma);
// The seven imbalance patterns and eight variance pairs of the grouped
// random-effect study.
std::vector<std::vector<int>> default_ranef_patterns();
std::vector<std::pair<double, double>> default_variance_pairs();

// Multivariate normal study: per replicate, simulate, run the rotation
// chains, and test the seven covariance regions (four metric balls, three
// scalar central intervals) plus the Euclidean ball for the mean vector.
struct MvnStudyConfig {
    Eigen::VectorXd mu;        // empty: standard truth
    Eigen::MatrixXd sigma;
    int n_obs = 100;
    int replicates = 200;
    std::vector<double> levels{0.80, 0.90, 0.95, 0.99};
    int chains = 2;
    int iterations = 3000;     // per chain, including burn-in
    int burn_in = 500;
    std::uint64_t seed = 1;
    int max_workers = 0;       // 0: GFI_THREADS or hardware
};

std::vector<CoverageRecord> run_mvn_study(const MvnStudyConfig& cfg);

// Grouped random-effect study over pattern x variance-pair cells; regions
// are equal-tailed intervals for both variance components.
struct RanefStudyConfig {
    std::vector<std::vector<int>> patterns;             // empty: defaults
    std::vector<std::pair<double, double>> variance_pairs;
    double beta0 = 1.0;
    int replicates = 100;      // per cell
    std::vector<double> levels{0.80, 0.90, 0.95, 0.99};
    int iterations = 4000;
    int burn_in = 1000;
    std::uint64_t seed = 1;
    int max_workers = 0;
};

std::vector<CoverageRecord> run_ranef_study(const RanefStudyConfig& cfg);

// Pooled-p study: equal-tailed intervals from exact fiducial draws under
// both conventions.
struct BinomPStudyConfig {
    long long trials = 10;
    int m = 10;
    std::vector<double> p_values{0.1, 0.5, 0.9};
    int replicates = 200;
    int draws = 2000;
    std::vector<double> levels{0.80, 0.90, 0.95, 0.99};
    std::uint64_t seed = 1;
    int max_workers = 0;
};

std::vector<CoverageRecord> run_binom_p_study(const BinomPStudyConfig& cfg);

// Unknown-n study at known p: upper sets from the endpoint mass function,
// plus mean absolute deviation of fiducial and flat-prior Bayesian draws
// from the true count (regions mad_fid / mad_bayes).
struct BinomNStudyConfig {
    long long n0 = 10;
    std::vector<double> p_values{0.4, 0.5, 0.6, 0.9, 0.99};
    int m = 100;
    int replicates = 300;      // per p cell
    double eps1 = 1e-8;
    int mad_draws = 1000;
    std::vector<double> levels{0.80, 0.90, 0.95, 0.99};
    std::uint64_t seed = 1;
    int max_workers = 0;
};

std::vector<CoverageRecord> run_binom_n_study(const BinomNStudyConfig& cfg);

// Joint (n, mu) study over Bin(p, n) cells: belief and plausibility boxes
// and marginal equal-tailed intervals from representative points, plus the
// per-replicate unbounded-tail fraction diagnostic.
struct BinomNpStudyConfig {
    std::vector<std::pair<long long, double>> cells{
        {15, 0.1}, {15, 0.5}, {15, 0.9}, {75, 0.1}, {75, 0.5}, {75, 0.9}};
    int m = 100;
    int replicates = 50;       // per cell
    double eps2 = 0.05;
    int iterations = 900;
    int burn_in = 300;
    int thin = 2;
    std::vector<double> levels{0.80, 0.90, 0.95, 0.99};
    std::uint64_t seed = 1;
    int max_workers = 0;
};

std::vector<CoverageRecord> run_binom_np_study(const BinomNpStudyConfig& cfg);

// Parses a JSON study document ({"family": ..., knobs...}), runs it, and
// writes the records and aggregate CSVs. seed_override, when nonzero,
// replaces the document seed; out_override replaces the records path.
// Progress notes go to diag. Returns the records path written.
std::string run_study_json(const std::string& json_text, std::uint64_t seed_override,
                           const std::string& out_override, std::ostream& diag);

} // namespace gfi
