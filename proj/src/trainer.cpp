#include "timesynth/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "timesynth/error.hpp"
#include "timesynth/rng.hpp"

namespace timesynth {

namespace {

using models::Matrix;

constexpr std::size_t kEvalChunk = 1024;
constexpr double kMinScale = 1e-8;

struct WindowStats {
  double mean = 0.0;
  double scale = 1.0;
};

WindowStats window_stats(std::span<const double> x) {
  WindowStats s;
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(acc / static_cast<double>(x.size()));
  s.scale = sd > kMinScale ? sd : 1.0;
  return s;
}

// Copies windows [first, first + count) of `order` into column batches.
void gather(std::span<const WindowPair> windows, std::span<const std::size_t> order, bool standardize,
            Matrix& inputs, Matrix* targets, std::vector<WindowStats>* stats) {
  const auto b = static_cast<Eigen::Index>(order.size());
  const auto h = static_cast<Eigen::Index>(windows[order[0]].history.size());
  const auto f = static_cast<Eigen::Index>(windows[order[0]].future.size());
  inputs.resize(h, b);
  if (targets) targets->resize(f, b);
  if (stats) stats->resize(order.size());
  for (Eigen::Index c = 0; c < b; ++c) {
    const auto& w = windows[order[static_cast<std::size_t>(c)]];
    const WindowStats s = standardize ? window_stats(w.history) : WindowStats{};
    for (Eigen::Index r = 0; r < h; ++r) inputs(r, c) = (w.history[static_cast<std::size_t>(r)] - s.mean) / s.scale;
    if (targets) {
      for (Eigen::Index r = 0; r < f; ++r) {
        (*targets)(r, c) = (w.future[static_cast<std::size_t>(r)] - s.mean) / s.scale;
      }
    }
    if (stats) (*stats)[static_cast<std::size_t>(c)] = s;
  }
}

void check_windows(std::span<const WindowPair> windows, const models::Forecaster& model, const char* what) {
  if (windows.empty()) throw InvalidInput(std::string(what) + ": no windows");
  for (const auto& w : windows) {
    if (w.history.size() != model.history() || w.future.size() != model.horizon()) {
      throw InvalidInput(std::string(what) + ": window shape does not match the model");
    }
  }
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TrainConfig TrainConfig::defaults_for(models::ModelKind kind) {
  TrainConfig cfg;
  if (kind == models::ModelKind::Mlp) {
    cfg.learning_rate = 1e-4;
    cfg.weight_decay = 1e-4;
    cfg.max_epochs = 300;
  }
  return cfg;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(weight_decay >= 0.0) || max_epochs == 0 || batch_size == 0) {
    throw ConfigError("train: learning rate > 0, weight decay >= 0, epochs and batch size >= 1 required");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw ConfigError("train: invalid Adam moment parameters");
  }
}

Matrix forecast_windows(const models::Forecaster& model, std::span<const WindowPair> windows, bool standardize) {
  check_windows(windows, model, "forecast_windows");
  Matrix out(static_cast<Eigen::Index>(model.horizon()), static_cast<Eigen::Index>(windows.size()));
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  Matrix inputs, pred;
  std::vector<WindowStats> stats;
  for (std::size_t first = 0; first < windows.size(); first += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, windows.size() - first);
    gather(windows, std::span(order).subspan(first, count), standardize, inputs, nullptr, &stats);
    model.forward_batch(inputs, pred);
    for (std::size_t c = 0; c < count; ++c) {
      const auto col = static_cast<Eigen::Index>(c);
      out.col(static_cast<Eigen::Index>(first + c)) = pred.col(col).array() * stats[c].scale + stats[c].mean;
    }
  }
  return out;
}

double evaluate_mse(const models::Forecaster& model, std::span<const WindowPair> windows, bool standardize) {
  const Matrix pred = forecast_windows(model, windows, standardize);
  double acc = 0.0;
  for (std::size_t c = 0; c < windows.size(); ++c) {
    const auto& fut = windows[c].future;
    for (std::size_t r = 0; r < fut.size(); ++r) {
      const double d = pred(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) - fut[r];
      acc += d * d;
    }
  }
  return acc / static_cast<double>(windows.size() * model.horizon());
}

TrainResult train(const models::Forecaster& initial, std::span<const WindowPair> train_windows,
                  std::span<const WindowPair> val_windows, const TrainConfig& cfg) {
  cfg.validate();
  check_windows(train_windows, initial, "train");
  check_windows(val_windows, initial, "train (validation)");

  TrainResult result;
  auto model = initial.clone();
  auto params = model->parameters();
  const std::size_t n_params = params.size();
  std::vector<double, Eigen::aligned_allocator<double>> grad(n_params), m(n_params, 0.0), v(n_params, 0.0);
  std::vector<double> best(params.begin(), params.end());
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::size_t step = 0;

  std::vector<std::size_t> order(train_windows.size());
  Matrix inputs, targets;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Engine engine = make_engine(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[engine() % i]);
    }

    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - first);
      gather(train_windows, std::span(order).subspan(first, count), cfg.standardize, inputs, &targets, nullptr);
      const double loss = model->loss_gradient(inputs, targets, grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", step " << step + 1
            << " (learning rate " << cfg.learning_rate << ", max |param| " << max_abs(params)
            << ", max |input| " << inputs.cwiseAbs().maxCoeff() << "); lower the learning rate or "
            << "enable per-window standardization";
        throw TrainingError(msg.str());
      }
      epoch_loss += loss * static_cast<double>(count);

      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
      for (std::size_t i = 0; i < n_params; ++i) {
        const double g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        params[i] = params[i] * decay -
                    cfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.epsilon);
      }
    }

    const double val = evaluate_mse(*model, val_windows, cfg.standardize);
    if (!std::isfinite(val)) {
      throw TrainingError("training diverged: non-finite validation MSE at epoch " + std::to_string(epoch));
    }
    EpochRecord rec{epoch, epoch_loss / static_cast<double>(order.size()), val, best_val, false};
    if (val < best_val) {
      best_val = val;
      std::copy(params.begin(), params.end(), best.begin());
      result.best_epoch = epoch;
      stale = 0;
      rec.improved = true;
    } else {
      ++stale;
    }
    rec.best_val_mse = best_val;
    result.history.push_back(rec);
    if (!rec.improved && stale >= cfg.patience) {
      result.early_stopped = epoch < cfg.max_epochs;
      break;
    }
  }

  std::copy(best.begin(), best.end(), params.begin());
  result.model = std::move(model);
  result.best_val_mse = best_val;
  return result;
}

std::unique_ptr<models::LinearModel> least_squares_oracle(std::span<const WindowPair> train_windows,
                                                          double ridge) {
  if (train_windows.empty()) throw InvalidInput("least_squares_oracle: no windows");
  const std::size_t h = train_windows[0].history.size();
  const std::size_t f = train_windows[0].future.size();
  if (train_windows.size() < h + 1) {
    throw InvalidInput("least_squares_oracle: need at least H+1 = " + std::to_string(h + 1) + " windows");
  }
  const auto hi = static_cast<Eigen::Index>(h), fi = static_cast<Eigen::Index>(f);

  // Normal equations on the augmented input [x; 1], accumulated in chunks.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(hi + 1, hi + 1);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(fi, hi + 1);
  constexpr std::size_t kChunk = 4096;
  Eigen::MatrixXd xa, y;
  for (std::size_t first = 0; first < train_windows.size(); first += kChunk) {
    const std::size_t count = std::min(kChunk, train_windows.size() - first);
    xa.resize(hi + 1, static_cast<Eigen::Index>(count));
    y.resize(fi, static_cast<Eigen::Index>(count));
    for (std::size_t c = 0; c < count; ++c) {
      const auto& w = train_windows[first + c];
      if (w.history.size() != h || w.future.size() != f) {
        throw InvalidInput("least_squares_oracle: inconsistent window shapes");
      }
      const auto col = static_cast<Eigen::Index>(c);
      for (std::size_t r = 0; r < h; ++r) xa(static_cast<Eigen::Index>(r), col) = w.history[r];
      xa(hi, col) = 1.0;
      for (std::size_t r = 0; r < f; ++r) y(static_cast<Eigen::Index>(r), col) = w.future[r];
    }
    gram.noalias() += xa * xa.transpose();
    cross.noalias() += y * xa.transpose();
  }
  gram.diagonal().array() += ridge;
  const Eigen::MatrixXd coef = gram.ldlt().solve(cross.transpose()).transpose();  // F x (H+1)

  models::ModelConfig cfg;
  cfg.kind = models::ModelKind::Linear;
  cfg.history = h;
  cfg.horizon = f;
  auto model = std::make_unique<models::LinearModel>(cfg);
  model->weight() = coef.leftCols(hi);
  model->bias() = coef.col(hi);
  return model;
}

}  // namespace timesynth
