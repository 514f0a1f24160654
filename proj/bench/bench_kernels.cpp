// OpenMP kernels against their serial twins, and the batched model gradient
// against the per-sample reference. Thread count follows OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include <random>

#include "timesynth/kernels.hpp"
#include "timesynth/models.hpp"
#include "timesynth/reference.hpp"
#include "timesynth/rng.hpp"
#include "timesynth/signal_gen.hpp"

using namespace timesynth;

namespace {

std::vector<SignalSpec> specs(std::size_t n) {
  const auto ds = build_dataset(Family::Dpm, FamilyRanges::defaults(Family::Dpm), SplitSizes{n, 0, 0}, 1);
  std::vector<SignalSpec> out;
  for (const auto& s : ds.series) out.push_back(s.spec);
  return out;
}

void BM_render(benchmark::State& state, bool parallel) {
  const auto s = specs(static_cast<std::size_t>(state.range(0)));
  const SamplingGrid grid;
  for (auto _ : state) {
    auto out = parallel ? kernels::render_all(s, grid) : kernels::render_all_serial(s, grid);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["threads"] = parallel ? kernels::max_threads() : 1;
}

void BM_score(benchmark::State& state, bool parallel) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Engine engine = make_engine(2);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> pred(n, std::vector<double>(100)), truth(n, std::vector<double>(100));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 100; ++k) {
      truth[i][k] = std::sin(0.6 * static_cast<double>(k)) + 0.1 * normal(engine);
      pred[i][k] = std::sin(0.55 * static_cast<double>(k)) + 0.1 * normal(engine);
    }
  }
  std::vector<kernels::WindowView> views;
  for (std::size_t i = 0; i < n; ++i) views.push_back({pred[i], truth[i]});
  for (auto _ : state) {
    auto out = parallel ? kernels::score_windows(views, 10.0) : kernels::score_windows_serial(views, 10.0);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["threads"] = parallel ? kernels::max_threads() : 1;
}

void BM_gradient(benchmark::State& state, models::ModelKind kind, bool batched) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  models::ModelConfig cfg;
  cfg.kind = kind;
  const auto model = models::make_model(cfg, 3);
  Engine engine = make_engine(4);
  std::normal_distribution<double> normal;
  models::Matrix x(50, n), y(100, n);
  for (double& v : x.reshaped()) v = normal(engine);
  for (double& v : y.reshaped()) v = normal(engine);
  std::vector<std::vector<double>> xs, ys;
  for (Eigen::Index j = 0; j < n; ++j) {
    xs.emplace_back(x.col(j).data(), x.col(j).data() + 50);
    ys.emplace_back(y.col(j).data(), y.col(j).data() + 100);
  }
  std::vector<double> grad(model->parameter_count());
  for (auto _ : state) {
    const double loss = batched ? model->loss_gradient(x, y, grad) : reference::loss_gradient(*model, xs, ys, grad);
    benchmark::DoNotOptimize(loss);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_render, serial, false)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_render, openmp, true)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_score, serial, false)->Arg(2300)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_score, openmp, true)->Arg(2300)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_gradient, linear_reference, models::ModelKind::Linear, false)->Arg(128);
BENCHMARK_CAPTURE(BM_gradient, linear_batched, models::ModelKind::Linear, true)->Arg(128);
BENCHMARK_CAPTURE(BM_gradient, mlp_reference, models::ModelKind::Mlp, false)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_gradient, mlp_batched, models::ModelKind::Mlp, true)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
