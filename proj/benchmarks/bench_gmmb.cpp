#include <gmmb/gmmb.hpp>

#include "support/synthetic.hpp"

#include <benchmark/benchmark.h>

using namespace gmmb;
using gmmb::testing::vec;

namespace {

testing::Sample bounded_sample(int n, int d, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> means(2), sds(2);
  means[0] = Eigen::VectorXd::Constant(d, 1.0);
  means[1] = Eigen::VectorXd::LinSpaced(d, 2.5, 4.0);
  sds[0] = Eigen::VectorXd::Constant(d, 0.4);
  sds[1] = Eigen::VectorXd::Constant(d, 0.6);
  return testing::sample_bounded_mixture(n, {0.4, 0.6}, means, sds, BoundsSpec::uniform(d, Bound::lower_at(0)),
                                         Eigen::VectorXd::Constant(d, 0.4), seed);
}

void BM_Transform(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto s = bounded_sample(n, 6, 1);
  TransformParams tp(BoundsSpec::uniform(6, Bound::lower_at(0)));
  for (Eigen::Index j = 0; j < 6; ++j) tp.set_lambda(j, 0.1 * static_cast<double>(j) - 0.2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transform(s.x, tp));
    benchmark::DoNotOptimize(log_jacobian_rows(s.x, tp));
  }
  state.SetItemsProcessed(state.iterations() * n * 6);
}
BENCHMARK(BM_Transform)->Arg(1000)->Arg(100000);

void BM_EStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int G = static_cast<int>(state.range(1));
  const int d = 6;
  const auto s = bounded_sample(n, d, 2);
  const Dataset data(s.x);
  TransformParams tp(BoundsSpec::uniform(d, Bound::lower_at(0)));
  MixtureParams p;
  p.model = Model::VVV;
  p.weights = Eigen::VectorXd::Constant(G, 1.0 / G);
  for (int k = 0; k < G; ++k) {
    p.means.push_back(Eigen::VectorXd::Constant(d, 0.5 * k));
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d) * (1.0 + 0.1 * k);
    sigma(0, 1) = sigma(1, 0) = 0.3;
    p.covariances.push_back(CovarianceFactors::from_matrix(sigma));
  }
  for (auto _ : state) benchmark::DoNotOptimize(e_step(data, p, tp));
  state.SetItemsProcessed(state.iterations() * n * G);
}
BENCHMARK(BM_EStep)->Args({1000, 2})->Args({1000, 5})->Args({20000, 3});

void BM_FitUnivariate(benchmark::State& state) {
  const auto s = testing::two_cluster_1d(static_cast<int>(state.range(0)), 0.5, 3);
  const Dataset data(s.x);
  const BoundsSpec bounds({Bound::lower_at(0)});
  FitConfig cfg;
  cfg.G = 2;
  cfg.model = Model::V;
  for (auto _ : state) benchmark::DoNotOptimize(fit(data, bounds, cfg));
}
BENCHMARK(BM_FitUnivariate)->Arg(245)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_FitMultivariate(benchmark::State& state) {
  const Model model = static_cast<Model>(state.range(0));
  const auto s = bounded_sample(440, 6, 4);
  const Dataset data(s.x);
  const BoundsSpec bounds = BoundsSpec::uniform(6, Bound::lower_at(0));
  FitConfig cfg;
  cfg.G = 2;
  cfg.model = model;
  for (auto _ : state) benchmark::DoNotOptimize(fit(data, bounds, cfg));
  state.SetLabel(std::string(name(model)));
}
BENCHMARK(BM_FitMultivariate)
    ->Arg(static_cast<int>(Model::VVI))
    ->Arg(static_cast<int>(Model::VVV))
    ->Arg(static_cast<int>(Model::VVE))
    ->Unit(benchmark::kMillisecond)
    ->Iterations(1);

void BM_Sweep(benchmark::State& state) {
  const auto s = testing::two_cluster_1d(245, 0.5, 5);
  const Dataset data(s.x);
  FitConfig base;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sweep(data, BoundsSpec({Bound::lower_at(0)}), {1, 2, 3, 4, 5}, {Model::E, Model::V},
                                   base, static_cast<unsigned>(state.range(0))));
  }
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
BENCHMARK_MAIN();
