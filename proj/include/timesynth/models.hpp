#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace timesynth::models {

// Batches are column-major with one sample per column: inputs are H x B,
// outputs and targets F x B.
using Matrix = Eigen::MatrixXd;

enum class ModelKind { Linear, DLinear, Fits, Mlp };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::Linear;
  std::size_t history = 50;
  std::size_t horizon = 100;
  std::size_t kernel_size = 15;           // DLinear decomposition
  double cutoff_hz = 15.0;                // FITS, clipped to Nyquist
  double sample_rate_hz = 10.0;           // FITS bin frequencies
  std::vector<std::size_t> hidden{256, 512};  // MLP hidden widths

  void validate() const;
};

// Every forecaster keeps its parameters in one flat vector so the optimizer,
// the checkpoint format and finite-difference checks can treat them alike.
// Matrices inside the vector are stored column-major.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  const ModelConfig& config() const { return cfg_; }
  ModelKind kind() const { return cfg_.kind; }
  std::size_t history() const { return cfg_.history; }
  std::size_t horizon() const { return cfg_.horizon; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  virtual void forward_batch(const Matrix& inputs, Matrix& outputs) const = 0;

  // Loss = mean over the batch of the per-sample MSE over the horizon.
  // Overwrites `grad` with dLoss/dparameters and returns the loss.
  virtual double loss_gradient(const Matrix& inputs, const Matrix& targets, std::span<double> grad) const = 0;

  virtual std::unique_ptr<Forecaster> clone() const = 0;

  std::vector<double> forward(std::span<const double> history) const;
  std::vector<double> backward(std::span<const double> history, std::span<const double> target) const;
  double loss(const Matrix& inputs, const Matrix& targets) const;

 protected:
  Forecaster(ModelConfig cfg, std::size_t n_params);
  void check_batch(const Matrix& inputs, const Matrix* targets) const;

  ModelConfig cfg_;
  // Aligned so vectorized reductions see the same alignment on every run.
  std::vector<double, Eigen::aligned_allocator<double>> params_;
};

// y = W x + b. Layout: W (F x H), b (F).
class LinearModel final : public Forecaster {
 public:
  explicit LinearModel(const ModelConfig& cfg);

  Eigen::Map<Eigen::MatrixXd> weight() { return {params_.data(), ho(), hi()}; }
  Eigen::Map<const Eigen::MatrixXd> weight() const { return {params_.data(), ho(), hi()}; }
  Eigen::Map<Eigen::VectorXd> bias() { return {params_.data() + ho() * hi(), ho()}; }
  Eigen::Map<const Eigen::VectorXd> bias() const { return {params_.data() + ho() * hi(), ho()}; }

  void forward_batch(const Matrix& inputs, Matrix& outputs) const override;
  double loss_gradient(const Matrix& inputs, const Matrix& targets, std::span<double> grad) const override;
  std::unique_ptr<Forecaster> clone() const override { return std::make_unique<LinearModel>(*this); }

 private:
  Eigen::Index hi() const { return static_cast<Eigen::Index>(cfg_.history); }
  Eigen::Index ho() const { return static_cast<Eigen::Index>(cfg_.horizon); }
};

// Moving-average decomposition into trend and seasonal parts, each with its
// own affine map. Layout: W_trend, b_trend, W_seasonal, b_seasonal.
class DLinearModel final : public Forecaster {
 public:
  explicit DLinearModel(const ModelConfig& cfg);

  std::size_t trend_offset() const { return 0; }
  std::size_t seasonal_offset() const { return cfg_.horizon * (cfg_.history + 1); }

  // Trend part (H x B); the seasonal part is inputs - trend.
  Matrix trend(const Matrix& inputs) const;

  void forward_batch(const Matrix& inputs, Matrix& outputs) const override;
  double loss_gradient(const Matrix& inputs, const Matrix& targets, std::span<double> grad) const override;
  std::unique_ptr<Forecaster> clone() const override { return std::make_unique<DLinearModel>(*this); }

 private:
  Matrix averaging_;  // H x H moving-average operator with edge replication
};

// Frequency-domain interpolation: rFFT of the history, low-pass to the
// cutoff, dense complex map to the rFFT bins of an (H+F)-sample signal,
// amplitude rescale by (H+F)/H, inverse rFFT, keep the last F samples.
// Layout: real parts (K_out x K_in), then imaginary parts (K_out x K_in).
class FitsModel final : public Forecaster {
 public:
  explicit FitsModel(const ModelConfig& cfg);

  std::size_t input_bins() const { return k_in_; }
  std::size_t output_bins() const { return k_out_; }
  double amplitude_scale() const;

  // Sets the bin-wise embedding k -> round(k (H+F)/H) to 1, everything else to 0.
  void set_identity_embedding();

  void forward_batch(const Matrix& inputs, Matrix& outputs) const override;
  double loss_gradient(const Matrix& inputs, const Matrix& targets, std::span<double> grad) const override;
  std::unique_ptr<Forecaster> clone() const override { return std::make_unique<FitsModel>(*this); }

  static std::size_t count_input_bins(std::size_t history, double sample_rate_hz, double cutoff_hz);

 private:
  std::size_t k_in_;
  std::size_t k_out_;
  Matrix dft_cos_;    // K_in x H
  Matrix dft_sin_;    // K_in x H, negative sine (imaginary part of the rFFT)
  Matrix synth_re_;   // F x K_out, includes the 1/n, Hermitian weights and rescale
  Matrix synth_im_;   // F x K_out
};

// input -> hidden[0] -> ReLU -> hidden[1] -> ReLU ... -> F.
// Layout per layer: W (out x in), then b (out).
class MlpModel final : public Forecaster {
 public:
  explicit MlpModel(const ModelConfig& cfg);

  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t offset = 0;  // into the flat parameter vector
  };
  const std::vector<Layer>& layers() const { return layers_; }

  void forward_batch(const Matrix& inputs, Matrix& outputs) const override;
  double loss_gradient(const Matrix& inputs, const Matrix& targets, std::span<double> grad) const override;
  std::unique_ptr<Forecaster> clone() const override { return std::make_unique<MlpModel>(*this); }

 private:
  std::vector<Layer> layers_;
};

// Allocates a model and initializes it deterministically from `seed`:
// affine maps U(-1/sqrt(fan_in), 1/sqrt(fan_in)); FITS starts at the identity
// embedding plus U(-0.01, 0.01) noise.
std::unique_ptr<Forecaster> make_model(const ModelConfig& cfg, std::uint64_t seed);

// Uninitialized (all-zero) instance of the right class.
std::unique_ptr<Forecaster> make_zero_model(const ModelConfig& cfg);

nlohmann::json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Forecaster& model, std::string_view name);
std::unique_ptr<Forecaster> checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Forecaster& model, std::string_view name, const std::filesystem::path& path);
std::unique_ptr<Forecaster> load_checkpoint(const std::filesystem::path& path);

}  // namespace timesynth::models
