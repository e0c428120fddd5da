// Micro-benchmarks for the numerical kernels that dominate study runtime.

#include <benchmark/benchmark.h>

#include <vector>

#include <Eigen/Dense>

#include "gfi/binom_n.hpp"
#include "gfi/binom_np.hpp"
#include "gfi/linalg.hpp"
#include "gfi/mvn.hpp"
#include "gfi/ranef.hpp"
#include "gfi/rng.hpp"
#include "gfi/special.hpp"
#include "gfi/studies.hpp"

namespace {

std::vector<long long> counts(long long n, double p, int m, std::uint64_t seed) {
    gfi::Rng rng(seed);
    std::vector<long long> y(m);
    for (auto& v : y) v = gfi::simulate_binomial(n, p, rng);
    return y;
}

void BM_RegIncBeta(benchmark::State& state) {
    double x = 0.01;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfi::reg_inc_beta(12.5, 30.7, x));
        x += 0.001;
        if (x > 0.99) x = 0.01;
    }
}
BENCHMARK(BM_RegIncBeta);

void BM_InvRegIncBeta(benchmark::State& state) {
    double u = 0.01;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfi::inv_reg_inc_beta(12.5, 30.7, u));
        u += 0.001;
        if (u > 0.99) u = 0.01;
    }
}
BENCHMARK(BM_InvRegIncBeta);

void BM_PseudoDet(benchmark::State& state) {
    const int d = 4;
    const int n = static_cast<int>(state.range(0));
    gfi::Rng rng(17);
    Eigen::VectorXd mu(d), lam(d), veck(d * (d - 1) / 2);
    for (int i = 0; i < d; ++i) {
        mu(i) = rng.normal();
        lam(i) = 0.5 + rng.uniform();
    }
    for (int k = 0; k < veck.size(); ++k) veck(k) = rng.normal();
    Eigen::MatrixXd stacked(n * d, d * (d + 3) / 2);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd y(d);
        for (int j = 0; j < d; ++j) y(j) = 2.0 * rng.normal();
        stacked.middleRows(i * d, d) = gfi::jacobian_columns(y, mu, veck, lam);
    }
    for (auto _ : state) benchmark::DoNotOptimize(gfi::pseudo_det(stacked));
}
BENCHMARK(BM_PseudoDet)->Arg(25)->Arg(100);

void BM_LogMarginalA(benchmark::State& state) {
    const int d = 4;
    const int n = 100;
    gfi::Rng rng(11);
    Eigen::MatrixXd obs(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) obs(i, j) = rng.normal() * (1.0 + j);
    const gfi::MvnData data = gfi::MvnData::from_observations(obs);
    Eigen::VectorXd veck(d * (d - 1) / 2);
    for (int k = 0; k < veck.size(); ++k) veck(k) = 0.3 * rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(gfi::log_marginal_A(data, veck));
}
BENCHMARK(BM_LogMarginalA);

void BM_ReLogDensity(benchmark::State& state) {
    gfi::ReModel model;
    model.group_sizes = {5, 10, 15, 20, 25, 30};
    gfi::Rng rng(23);
    Eigen::VectorXd y(model.total_size());
    for (int i = 0; i < y.size(); ++i) y(i) = 1.0 + rng.normal();
    gfi::ReParams params;
    params.beta = Eigen::VectorXd::Constant(1, 1.0);
    params.sigma_a2 = 0.8;
    params.sigma_e2 = 1.3;
    for (auto _ : state) benchmark::DoNotOptimize(gfi::re_log_density(y, model, params));
}
BENCHMARK(BM_ReLogDensity);

void BM_DsMasses(benchmark::State& state) {
    const auto y = counts(10, 0.5, static_cast<int>(state.range(0)), 31);
    const gfi::IntegerInterval range = gfi::candidate_range(y, 0.5, 1e-8);
    for (auto _ : state)
        benchmark::DoNotOptimize(gfi::ds_masses(range, y, 0.5));
}
BENCHMARK(BM_DsMasses)->Arg(10)->Arg(100);

void BM_SolutionSet(benchmark::State& state) {
    const auto y = counts(15, 0.5, 100, 41);
    gfi::Rng rng(42);
    gfi::NpSamplerConfig cfg;
    cfg.eps2 = 0.05;
    const gfi::NpState st = gfi::init_state(y, cfg, rng);
    gfi::NpSolveConfig solve;
    solve.eps2 = cfg.eps2;
    for (auto _ : state)
        benchmark::DoNotOptimize(gfi::solution_set(st.u, y, solve));
}
BENCHMARK(BM_SolutionSet);

void BM_NpSweep(benchmark::State& state) {
    const auto y = counts(15, 0.5, 100, 53);
    gfi::NpSamplerConfig cfg;
    cfg.eps2 = 0.05;
    gfi::NpEngine engine(y, cfg);
    gfi::Rng rng(54);
    for (auto _ : state) {
        engine.gibbs_scan(rng);
        benchmark::DoNotOptimize(engine.mh_step_mu(rng));
        benchmark::DoNotOptimize(engine.mh_step_n(rng));
    }
}
BENCHMARK(BM_NpSweep);

} // namespace

BENCHMARK_MAIN();
