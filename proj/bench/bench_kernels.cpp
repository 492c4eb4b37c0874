// OpenMP kernels against their serial references on the direct model.

#include <benchmark/benchmark.h>

#include <map>

#include "loos/estimators.hpp"

using namespace loos;

namespace {

struct Fixture {
  SparseMatrix q;
  Vector mu;
  Vector y;
  std::vector<GaussPredictive> preds;
};

const Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  ModelSpec model;
  model.lattice = LatticeSpec::for_size(n);
  const Theta th = Theta::natural(0.16, 1.75);
  Fixture f;
  f.q = PrecisionBuilder(model).build(th);
  f.mu = mean_vector(th, model);
  f.y = simulate(model, th, 1, 1).replicates[0];
  f.preds = loo_conditionals_direct(f.q, f.mu, f.y);
  return cache.emplace(n, std::move(f)).first->second;
}

void BM_spmv(benchmark::State& st) {
  const auto& f = fixture(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(spmv(f.q, f.y));
}

void BM_spmv_serial(benchmark::State& st) {
  const auto& f = fixture(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(serial::spmv(f.q, f.y));
}

void BM_score_all(benchmark::State& st) {
  const auto& f = fixture(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(score_all(ScoringRule::root(), f.preds, f.y));
}

void BM_score_all_serial(benchmark::State& st) {
  const auto& f = fixture(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(serial::score_all(ScoringRule::root(), f.preds, f.y));
}

void BM_loo_direct(benchmark::State& st) {
  const auto& f = fixture(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(loo_conditionals_direct(f.q, f.mu, f.y));
}

void BM_loo_direct_serial(benchmark::State& st) {
  const auto& f = fixture(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(serial::loo_conditionals_direct(f.q, f.mu, f.y));
}

}  // namespace

BENCHMARK(BM_spmv)->Arg(1600)->Arg(25600);
BENCHMARK(BM_spmv_serial)->Arg(1600)->Arg(25600);
BENCHMARK(BM_score_all)->Arg(1600)->Arg(25600);
BENCHMARK(BM_score_all_serial)->Arg(1600)->Arg(25600);
BENCHMARK(BM_loo_direct)->Arg(1600)->Arg(25600);
BENCHMARK(BM_loo_direct_serial)->Arg(1600)->Arg(25600);

BENCHMARK_MAIN();
