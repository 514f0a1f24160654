#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "timesynth/error.hpp"
#include "timesynth/rng.hpp"
#include "timesynth/signal_gen.hpp"
#include "timesynth/trainer.hpp"

using namespace timesynth;
using namespace timesynth::models;

namespace {

struct Windows {
  std::vector<std::vector<double>> series;
  std::vector<WindowPair> train, val, test;
};

// Windows from one long 1 Hz sinusoid, split by position.
Windows single_tone(std::size_t stride) {
  Windows w;
  w.series.push_back(oracles::tone(3000, 1.0, 10.0, 0.3));
  const auto all = make_windows(w.series[0], 50, 100, stride);
  const std::size_t n_train = all.size() * 7 / 10, n_val = all.size() / 10;
  w.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  w.val.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train),
               all.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  w.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), all.end());
  return w;
}

Windows family_windows(Family family, const FamilyRanges& ranges, std::size_t n, std::size_t stride,
                       std::uint64_t seed) {
  Windows w;
  const auto ds = build_dataset(family, ranges, {n, n / 5 + 1, n / 5 + 1}, seed);
  for (const auto& s : ds.series) w.series.push_back(s.values);
  for (std::size_t i = 0; i < ds.series.size(); ++i) {
    auto win = make_windows(w.series[i], 50, 100, stride);
    auto& dst = ds.series[i].split == Split::Train ? w.train : ds.series[i].split == Split::Validation ? w.val : w.test;
    dst.insert(dst.end(), win.begin(), win.end());
  }
  return w;
}

double training_mse(const Forecaster& model, std::span<const WindowPair> windows) {
  return evaluate_mse(model, windows);
}

}  // namespace

TEST_CASE("config defaults") {
  const auto lin = TrainConfig::defaults_for(ModelKind::Linear);
  CHECK(lin.learning_rate == 1e-3);
  CHECK(lin.weight_decay == 0.01);
  CHECK(lin.max_epochs == 200);
  const auto mlp = TrainConfig::defaults_for(ModelKind::Mlp);
  CHECK(mlp.learning_rate == 1e-4);
  CHECK(mlp.weight_decay == 1e-4);
  CHECK(mlp.max_epochs == 300);
  CHECK(mlp.batch_size == 128);
  CHECK(mlp.patience == 30);
  TrainConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("linear model learns a single sinusoid") {
  const auto w = single_tone(1);
  auto cfg = TrainConfig::defaults_for(ModelKind::Linear);
  cfg.seed = 1;
  const auto result = train(*make_model(ModelConfig{}, 1), w.train, w.val, cfg);
  INFO("best epoch " << result.best_epoch << ", val " << result.best_val_mse);
  CHECK(result.best_val_mse < 1e-6);
  CHECK(evaluate_mse(*result.model, w.val) == result.best_val_mse);
}

TEST_CASE("early stopping and monotone best validation") {
  const auto w = single_tone(5);
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.learning_rate = 0.05;  // large enough to bounce
  cfg.patience = 0;
  const auto r0 = train(*make_model(ModelConfig{}, 2), w.train, w.val, cfg);
  REQUIRE(!r0.history.empty());
  for (std::size_t i = 0; i + 1 < r0.history.size(); ++i) CHECK(r0.history[i].improved);
  if (r0.history.size() < cfg.max_epochs) CHECK(!r0.history.back().improved);

  cfg.patience = 3;
  const auto r3 = train(*make_model(ModelConfig{}, 2), w.train, w.val, cfg);
  std::size_t stale = 0;
  for (std::size_t i = 0; i < r3.history.size(); ++i) {
    const auto& e = r3.history[i];
    if (i > 0) REQUIRE(e.best_val_mse <= r3.history[i - 1].best_val_mse);
    stale = e.improved ? 0 : stale + 1;
    if (i + 1 < r3.history.size()) REQUIRE(stale < 3);
  }
  CHECK(r3.best_val_mse == doctest::Approx(evaluate_mse(*r3.model, w.val)).epsilon(1e-15));
  CHECK(r3.history[r3.best_epoch - 1].improved);
}

TEST_CASE("training is deterministic") {
  const auto w = single_tone(7);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.seed = 17;
  ModelConfig mc;
  mc.kind = ModelKind::Mlp;
  mc.hidden = {16, 8};
  const auto init = make_model(mc, 3);
  const auto a = train(*init, w.train, w.val, cfg);
  const auto b = train(*init, w.train, w.val, cfg);
  CHECK(std::equal(a.model->parameters().begin(), a.model->parameters().end(), b.model->parameters().begin()));
  cfg.seed = 18;
  const auto c = train(*init, w.train, w.val, cfg);
  CHECK(!std::equal(a.model->parameters().begin(), a.model->parameters().end(), c.model->parameters().begin()));
}

TEST_CASE("divergence is reported") {
  const auto w = single_tone(25);
  std::vector<double> huge(150, 1e200);
  std::vector<WindowPair> bad{{std::span(huge).first(50), std::span(huge).subspan(50)}};
  TrainConfig cfg;
  cfg.max_epochs = 2;
  CHECK_THROWS_AS(train(*make_model(ModelConfig{}, 1), bad, w.val, cfg), TrainingError);
  CHECK_THROWS_AS(train(*make_model(ModelConfig{}, 1), std::vector<WindowPair>{}, w.val, cfg), InvalidInput);
}

TEST_CASE("least squares oracle") {
  SUBCASE("recovers an exact affine map") {
    Engine engine = make_engine(31);
    std::normal_distribution<double> normal;
    ModelConfig mc;
    mc.history = 6;
    mc.horizon = 3;
    LinearModel truth(mc);
    for (double& p : truth.parameters()) p = normal(engine);
    std::vector<std::vector<double>> store;
    std::vector<WindowPair> windows;
    store.reserve(200);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x(6);
      for (double& v : x) v = normal(engine);
      store.push_back(x);
      store.push_back(truth.forward(x));
    }
    for (std::size_t i = 0; i < store.size(); i += 2) windows.push_back({store[i], store[i + 1]});
    const auto fit = least_squares_oracle(windows);
    for (std::size_t i = 0; i < truth.parameter_count(); ++i) REQUIRE(std::abs(fit->parameters()[i] - truth.parameters()[i]) < 1e-6);
    CHECK_THROWS_AS(least_squares_oracle(std::span(windows).first(6)), InvalidInput);
  }
  SUBCASE("single frequency is representable, a DPM continuum is not") {
    FamilyRanges point = FamilyRanges::defaults(Family::Drift);
    point.frequency = {1.0, 1.0};
    point.epsilon = {0.0, 0.0};
    point.trend = {0.0, 0.0};
    const auto single = family_windows(Family::Drift, point, 10, 5, 41);
    const double single_mse = training_mse(*least_squares_oracle(single.train), single.train);
    CHECK(single_mse < 1e-8);

    const auto dpm = family_windows(Family::Dpm, FamilyRanges::defaults(Family::Dpm), 20, 5, 42);
    const double dpm_mse = training_mse(*least_squares_oracle(dpm.train), dpm.train);
    INFO("single " << single_mse << ", dpm " << dpm_mse);
    CHECK(dpm_mse > 100.0 * single_mse);
    CHECK(dpm_mse > 1e-4);
  }
}
