#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "timesynth/models.hpp"
#include "timesynth/windows.hpp"

namespace timesynth {

// Mini-batch AdamW (decoupled weight decay) with validation early stopping.
struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  std::size_t max_epochs = 200;
  std::size_t patience = 30;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  bool standardize = false;  // per-window z-scoring of history and target
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // lr 1e-3, wd 1e-2, 200 epochs for Linear/DLinear/FITS;
  // lr 1e-4, wd 1e-4, 300 epochs for the MLP.
  static TrainConfig defaults_for(models::ModelKind kind);
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_mse = 0.0;
  double best_val_mse = 0.0;
  bool improved = false;
};

struct TrainResult {
  std::unique_ptr<models::Forecaster> model;  // best-validation checkpoint
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_mse = 0.0;
  bool early_stopped = false;
};

TrainResult train(const models::Forecaster& initial, std::span<const WindowPair> train_windows,
                  std::span<const WindowPair> val_windows, const TrainConfig& cfg);

// Forecasts for every window, one column each (F x N).
models::Matrix forecast_windows(const models::Forecaster& model, std::span<const WindowPair> windows,
                                bool standardize = false);

// Mean over windows of the horizon MSE.
double evaluate_mse(const models::Forecaster& model, std::span<const WindowPair> windows,
                    bool standardize = false);

inline constexpr double kOracleRidge = 1e-8;

// Closed-form ridge solution of the affine H -> F map minimizing the
// training MSE; independent of the gradient trainer.
std::unique_ptr<models::LinearModel> least_squares_oracle(std::span<const WindowPair> train_windows,
                                                          double ridge = kOracleRidge);

}  // namespace timesynth
