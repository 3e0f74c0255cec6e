#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <vector>

#include <lowdim/map.hpp>
#include <lowdim/models.hpp>
#include <lowdim/quadrature.hpp>
#include <lowdim/variational.hpp>

using namespace lowdim;

namespace {

MonotoneTriangularMap sample_map(int dim, int degree) {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> nd(0, 0.3);
  std::vector<int> perm(dim);
  std::iota(perm.begin(), perm.end(), 1);
  auto m = make_template(dim, perm, degree);
  Eigen::VectorXd c = m.coefficients();
  for (int i = 0; i < c.size(); ++i) c[i] += nd(gen);
  m.set_coefficients(c);
  return m;
}

void BM_evaluate(benchmark::State& state) {
  const int dim = int(state.range(0));
  const auto m = sample_map(dim, 2);
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd(0, 1);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = nd(gen);
  for (auto _ : state) benchmark::DoNotOptimize(m.evaluate(x));
}
BENCHMARK(BM_evaluate)->Arg(2)->Arg(4)->Arg(8);

void BM_invert(benchmark::State& state) {
  const int dim = int(state.range(0));
  const auto m = sample_map(dim, 2);
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd(0, 1);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = nd(gen);
  const Eigen::VectorXd y = m.evaluate(x);
  for (auto _ : state) benchmark::DoNotOptimize(m.invert(y));
}
BENCHMARK(BM_invert)->Arg(2)->Arg(4)->Arg(8);

void BM_kl_objective(benchmark::State& state) {
  const int dim = 2;
  const auto m = sample_map(dim, int(state.range(0)));
  const auto target = banana_density();
  const auto rule = ReferenceRule::gauss_hermite_tensor(dim, 10);
  for (auto _ : state)
    benchmark::DoNotOptimize(kl_objective(m, target, rule));
}
BENCHMARK(BM_kl_objective)->Arg(1)->Arg(2)->Arg(3);

}  // namespace

BENCHMARK_MAIN();
