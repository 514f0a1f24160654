#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "oracles.hpp"
#include "timesynth/dsp.hpp"
#include "timesynth/error.hpp"
#include "timesynth/models.hpp"
#include "timesynth/reference.hpp"
#include "timesynth/rng.hpp"

using namespace timesynth;
using namespace timesynth::models;

namespace {

ModelConfig small_config(ModelKind kind, Engine& engine) {
  std::uniform_int_distribution<std::size_t> hist(8, 16), hor(3, 7);
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.history = hist(engine);
  cfg.horizon = hor(engine);
  cfg.kernel_size = 5;
  cfg.cutoff_hz = std::uniform_real_distribution<double>(1.5, 6.0)(engine);
  cfg.hidden = {4, 4};
  return cfg;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Engine& engine) {
  std::normal_distribution<double> normal;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(engine);
  return m;
}

// Max over components of |analytic - numeric| / (|analytic| + |numeric| floor).
void check_gradient(const Forecaster& model, const Matrix& x, const Matrix& y) {
  std::vector<double> analytic(model.parameter_count());
  model.loss_gradient(x, y, analytic);

  auto probe = model.clone();
  const auto f = [&](std::span<const double> p) {
    std::copy(p.begin(), p.end(), probe->parameters().begin());
    return probe->loss(x, y);
  };
  const std::vector<double> p0(model.parameters().begin(), model.parameters().end());
  const auto numeric = oracles::finite_difference(f, p0, 1e-6);

  double scale = 0.0;
  for (double g : analytic) scale = std::max(scale, std::abs(g));
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    INFO("parameter " << i << " of " << analytic.size() << " (" << to_string(model.kind()) << ")");
    REQUIRE(oracles::close_rel(analytic[i], numeric[i], 1e-5, 1e-7 * scale));
  }
}

std::vector<std::vector<double>> columns(const Matrix& m) {
  std::vector<std::vector<double>> out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.emplace_back(m.col(j).data(), m.col(j).data() + m.rows());
  return out;
}

}  // namespace

TEST_CASE("finite-difference gradients for every model class") {
  Engine engine = make_engine(21);
  for (ModelKind kind : {ModelKind::Linear, ModelKind::DLinear, ModelKind::Fits, ModelKind::Mlp}) {
    for (int instance = 0; instance < 20; ++instance) {
      const auto cfg = small_config(kind, engine);
      const auto model = make_model(cfg, engine());
      const auto x = random_matrix(cfg.history, 3, engine);
      const auto y = random_matrix(cfg.horizon, 3, engine);
      check_gradient(*model, x, y);
    }
  }
}

TEST_CASE("mlp gradient on the H=8, 4/4, F=3 instance") {
  ModelConfig cfg;
  cfg.kind = ModelKind::Mlp;
  cfg.history = 8;
  cfg.horizon = 3;
  cfg.hidden = {4, 4};
  Engine engine = make_engine(22);
  const auto model = make_model(cfg, 5);
  CHECK(model->parameter_count() == 4 * 9 + 4 * 5 + 3 * 5);
  check_gradient(*model, random_matrix(8, 1, engine), random_matrix(3, 1, engine));
}

TEST_CASE("batched kernels agree with the serial reference") {
  Engine engine = make_engine(23);
  for (ModelKind kind : {ModelKind::Linear, ModelKind::DLinear, ModelKind::Fits, ModelKind::Mlp}) {
    for (int instance = 0; instance < 5; ++instance) {
      auto cfg = small_config(kind, engine);
      if (instance == 0) {
        cfg.history = 50;
        cfg.horizon = 100;
        cfg.kernel_size = 15;
        cfg.cutoff_hz = 15.0;
        cfg.hidden = {16, 8};
      }
      const auto model = make_model(cfg, engine());
      const auto x = random_matrix(cfg.history, 6, engine);
      const auto y = random_matrix(cfg.horizon, 6, engine);

      Matrix out;
      model->forward_batch(x, out);
      const auto xs = columns(x), ys = columns(y);
      for (std::size_t b = 0; b < xs.size(); ++b) {
        const auto ref = reference::forward(*model, xs[b]);
        for (std::size_t i = 0; i < ref.size(); ++i) {
          REQUIRE(std::abs(ref[i] - out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b))) <
                  1e-10 * (1.0 + std::abs(ref[i])));
        }
      }

      std::vector<double> g_fast(model->parameter_count()), g_ref(model->parameter_count());
      const double l_fast = model->loss_gradient(x, y, g_fast);
      const double l_ref = reference::loss_gradient(*model, xs, ys, g_ref);
      CHECK(l_fast == doctest::Approx(l_ref).epsilon(1e-12));
      double scale = 0.0;
      for (double g : g_ref) scale = std::max(scale, std::abs(g));
      for (std::size_t i = 0; i < g_ref.size(); ++i) REQUIRE(std::abs(g_fast[i] - g_ref[i]) <= 1e-10 * scale);
    }
  }
}

TEST_CASE("zero residual gives zero gradient") {
  Engine engine = make_engine(24);
  for (ModelKind kind : {ModelKind::Linear, ModelKind::DLinear, ModelKind::Fits, ModelKind::Mlp}) {
    const auto cfg = small_config(kind, engine);
    const auto model = make_model(cfg, 3);
    const auto x = random_matrix(cfg.history, 4, engine);
    Matrix y;
    model->forward_batch(x, y);
    std::vector<double> g(model->parameter_count(), 1.0);
    CHECK(model->loss_gradient(x, y, g) == 0.0);
    for (double v : g) REQUIRE(v == 0.0);
  }
}

TEST_CASE("linear model") {
  ModelConfig cfg;
  cfg.history = 6;
  cfg.horizon = 4;
  auto model = make_zero_model(cfg);
  auto& linear = static_cast<LinearModel&>(*model);
  linear.bias().setConstant(2.5);
  for (double v : model->forward(std::vector<double>{1, 2, 3, 4, 5, 6})) CHECK(v == 2.5);

  SUBCASE("single-sample gradient has the closed form") {
    Engine engine = make_engine(25);
    auto m = make_model(cfg, 7);
    const auto x = random_matrix(6, 1, engine);
    const auto y = random_matrix(4, 1, engine);
    std::vector<double> g(m->parameter_count());
    m->loss_gradient(x, y, g);
    Matrix yhat;
    m->forward_batch(x, yhat);
    const Matrix r = (2.0 / 4.0) * (yhat - y);
    const Matrix gw = r * x.transpose();
    for (Eigen::Index j = 0; j < 6; ++j)
      for (Eigen::Index i = 0; i < 4; ++i) REQUIRE(g[static_cast<std::size_t>(j * 4 + i)] == doctest::Approx(gw(i, j)).epsilon(1e-12));
    for (Eigen::Index i = 0; i < 4; ++i) REQUIRE(g[static_cast<std::size_t>(24 + i)] == doctest::Approx(r(i, 0)).epsilon(1e-12));

    const auto fd = oracles::finite_difference(
        [&](std::span<const double> p) {
          auto probe = m->clone();
          std::copy(p.begin(), p.end(), probe->parameters().begin());
          return probe->loss(x, y);
        },
        std::vector<double>(m->parameters().begin(), m->parameters().end()), 1e-6);
    for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(oracles::close_rel(g[i], fd[i], 1e-6, 1e-9));
  }
  CHECK_THROWS_AS(model->forward(std::vector<double>(5, 0.0)), InvalidInput);
}

TEST_CASE("dlinear decomposition is a partition") {
  ModelConfig cfg;
  cfg.kind = ModelKind::DLinear;
  Engine engine = make_engine(26);
  const auto model = make_model(cfg, 1);
  const auto& dl = static_cast<const DLinearModel&>(*model);
  const auto x = random_matrix(50, 5, engine);
  const Matrix trend = dl.trend(x);
  const Matrix seasonal = x - trend;
  // Exact up to the rounding of one subtraction and one addition.
  CHECK(((trend + seasonal) - x).cwiseAbs().maxCoeff() <= 4.0 * std::numeric_limits<double>::epsilon() * x.cwiseAbs().maxCoeff());
  for (std::size_t b = 0; b < 5; ++b) {
    std::vector<double> col(x.col(static_cast<Eigen::Index>(b)).data(), x.col(static_cast<Eigen::Index>(b)).data() + 50);
    const auto ma = dsp::moving_average(col, 15);
    for (std::size_t i = 0; i < 50; ++i) REQUIRE(trend(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) == doctest::Approx(ma[i]).epsilon(1e-12));
  }

  const Matrix constant = Matrix::Constant(50, 1, 1.75);
  const Matrix ct = dl.trend(constant);
  CHECK((ct.array() - 1.75).abs().maxCoeff() < 1e-14);

  // Zero seasonal map, trend map that copies the last trend sample.
  auto zero = make_zero_model(cfg);
  auto p = zero->parameters();
  for (std::size_t i = 0; i < 100; ++i) p[49 * 100 + i] = 1.0;
  for (double v : zero->forward(std::vector<double>(50, 1.75))) CHECK(v == doctest::Approx(1.75));
}

TEST_CASE("fits bins") {
  CHECK(FitsModel::count_input_bins(50, 10.0, 15.0) == 26);
  CHECK(FitsModel::count_input_bins(50, 10.0, 5.0) == 26);
  CHECK(FitsModel::count_input_bins(50, 10.0, 2.0) == 11);
  CHECK(FitsModel::count_input_bins(50, 10.0, 2.0) < FitsModel::count_input_bins(50, 10.0, 15.0));
  ModelConfig cfg;
  cfg.kind = ModelKind::Fits;
  const FitsModel fits(cfg);
  CHECK(fits.output_bins() == 76);
  CHECK(fits.input_bins() == 26);
  CHECK(fits.amplitude_scale() == doctest::Approx(3.0));
  CHECK(fits.parameter_count() == 2 * 26 * 76);
}

TEST_CASE("fits continues a bin-aligned tone") {
  ModelConfig cfg;
  cfg.kind = ModelKind::Fits;
  FitsModel fits(cfg);
  fits.set_identity_embedding();
  // 1 Hz at fs = 10 over 50 samples sits on bin 5.
  const auto full = oracles::tone(150, 1.0, 10.0, 0.4, 1.3);
  const std::vector<double> history(full.begin(), full.begin() + 50);
  const auto pred = fits.forward(history);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    num += pred[i] * full[50 + i];
    da += pred[i] * pred[i];
    db += full[50 + i] * full[50 + i];
    REQUIRE(std::abs(pred[i] - full[50 + i]) < 1e-9);
  }
  CHECK(num / std::sqrt(da * db) > 0.99);
}

TEST_CASE("mlp is finite and piecewise affine") {
  ModelConfig cfg;
  cfg.kind = ModelKind::Mlp;
  cfg.history = 10;
  cfg.horizon = 5;
  cfg.hidden = {8, 8};
  const auto model = make_model(cfg, 2);
  CHECK(model->parameter_count() == 8 * 11 + 8 * 9 + 5 * 9);
  Engine engine = make_engine(27);
  const auto x = random_matrix(10, 1, engine);
  Matrix y0, y1, y2;
  model->forward_batch(x, y0);
  model->forward_batch(x * 1.000001, y1);
  model->forward_batch(x * 1.000002, y2);
  CHECK(y0.allFinite());
  // Along a short ray the activation pattern is fixed, so outputs move linearly.
  CHECK(((y2 - y1) - (y1 - y0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto dir = std::filesystem::temp_directory_path() / "timesynth_ckpt_test";
  std::filesystem::remove_all(dir);
  for (ModelKind kind : {ModelKind::Linear, ModelKind::DLinear, ModelKind::Fits, ModelKind::Mlp}) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.hidden = {16, 8};
    const auto model = make_model(cfg, 99);
    const auto path = dir / ("model_" + std::string(to_string(kind)) + ".json");
    save_checkpoint(*model, to_string(kind), path);
    const auto back = load_checkpoint(path);
    CHECK(back->kind() == kind);
    CHECK(back->config().hidden == model->config().hidden);
    REQUIRE(back->parameter_count() == model->parameter_count());
    for (std::size_t i = 0; i < model->parameter_count(); ++i) REQUIRE(back->parameters()[i] == model->parameters()[i]);
  }
  std::filesystem::remove_all(dir);

  auto j = checkpoint_to_json(*make_model(ModelConfig{}, 1), "x");
  j["parameters"].erase(0);
  CHECK_THROWS_AS(checkpoint_from_json(j), timesynth::Error);
}

TEST_CASE("initialization is deterministic and config is validated") {
  ModelConfig cfg;
  cfg.kind = ModelKind::Mlp;
  cfg.hidden = {8};
  const auto a = make_model(cfg, 4), b = make_model(cfg, 4), c = make_model(cfg, 5);
  CHECK(std::equal(a->parameters().begin(), a->parameters().end(), b->parameters().begin()));
  CHECK(!std::equal(a->parameters().begin(), a->parameters().end(), c->parameters().begin()));
  for (double v : a->parameters().subspan(0, 8 * 50)) REQUIRE(std::abs(v) <= 1.0 / std::sqrt(50.0));

  cfg.hidden = {};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  ModelConfig d;
  d.kind = ModelKind::DLinear;
  d.kernel_size = 4;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  CHECK(parse_model_kind("mlinear") == ModelKind::Mlp);
  CHECK_THROWS_AS(parse_model_kind("patchtst"), ConfigError);
}

TEST_CASE("gradients do not depend on the output buffer's address") {
  Engine engine = make_engine(29);
  for (ModelKind kind : {ModelKind::Linear, ModelKind::DLinear, ModelKind::Fits, ModelKind::Mlp}) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.hidden = {16, 8};
    const auto model = make_model(cfg, 7);
    const auto x = random_matrix(50, 128, engine);
    const auto y = random_matrix(100, 128, engine);
    const std::size_t n = model->parameter_count();
    std::vector<double> buffer(n + 8);
    std::vector<double> first;
    for (std::size_t shift = 0; shift < 4; ++shift) {
      const std::span<double> grad(buffer.data() + shift, n);
      model->loss_gradient(x, y, grad);
      if (shift == 0) {
        first.assign(grad.begin(), grad.end());
      } else {
        INFO(to_string(kind) << " offset " << shift);
        CHECK(std::equal(first.begin(), first.end(), grad.begin()));
      }
    }
  }
}
