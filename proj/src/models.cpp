#include "timesynth/models.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "timesynth/dsp.hpp"
#include "timesynth/error.hpp"
#include "timesynth/io.hpp"
#include "timesynth/rng.hpp"

namespace timesynth::models {

namespace {

using Eigen::Index;
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Index idx(std::size_t n) { return static_cast<Index>(n); }

double unit_uniform(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

void fill_uniform(std::span<double> out, double bound, Engine& engine) {
  for (double& v : out) v = bound * (2.0 * unit_uniform(engine) - 1.0);
}

// dLoss/dOutputs for the batch-mean horizon MSE.
MatrixXd output_gradient(const MatrixXd& outputs, const MatrixXd& targets, double& loss) {
  const MatrixXd diff = outputs - targets;
  const double scale = 1.0 / static_cast<double>(diff.rows() * diff.cols());
  loss = diff.squaredNorm() * scale;
  return (2.0 * scale) * diff;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear: return "linear";
    case ModelKind::DLinear: return "dlinear";
    case ModelKind::Fits: return "fits";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear") return ModelKind::Linear;
  if (name == "dlinear") return ModelKind::DLinear;
  if (name == "fits") return ModelKind::Fits;
  if (name == "mlp" || name == "mlinear") return ModelKind::Mlp;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected linear, dlinear, fits, mlp)");
}

void ModelConfig::validate() const {
  if (history == 0 || horizon == 0) throw ConfigError("model: history and horizon must be positive");
  if (kind == ModelKind::DLinear && (kernel_size == 0 || kernel_size % 2 == 0 || kernel_size > history)) {
    throw ConfigError("dlinear: kernel size must be odd and no longer than the history");
  }
  if (kind == ModelKind::Fits && (!(cutoff_hz > 0.0) || !(sample_rate_hz > 0.0))) {
    throw ConfigError("fits: cutoff and sample rate must be positive");
  }
  if (kind == ModelKind::Mlp) {
    if (hidden.empty()) throw ConfigError("mlp: needs at least one hidden layer");
    for (auto w : hidden) {
      if (w == 0) throw ConfigError("mlp: hidden widths must be positive");
    }
  }
}

// ---------------------------------------------------------------------------
// Forecaster

Forecaster::Forecaster(ModelConfig cfg, std::size_t n_params) : cfg_(std::move(cfg)), params_(n_params, 0.0) {
  cfg_.validate();
}

void Forecaster::check_batch(const Matrix& inputs, const Matrix* targets) const {
  if (inputs.rows() != idx(cfg_.history)) {
    throw InvalidInput("forecaster: history length " + std::to_string(inputs.rows()) + " != " +
                       std::to_string(cfg_.history));
  }
  if (targets && (targets->rows() != idx(cfg_.horizon) || targets->cols() != inputs.cols())) {
    throw InvalidInput("forecaster: target batch shape mismatch");
  }
}

std::vector<double> Forecaster::forward(std::span<const double> history) const {
  if (history.size() != cfg_.history) {
    throw InvalidInput("forward: history length " + std::to_string(history.size()) + " != " +
                       std::to_string(cfg_.history));
  }
  for (double v : history) {
    if (!std::isfinite(v)) throw InvalidInput("forward: non-finite history value");
  }
  Matrix x = Map<const VectorXd>(history.data(), idx(history.size()));
  Matrix y;
  forward_batch(x, y);
  return {y.data(), y.data() + y.size()};
}

std::vector<double> Forecaster::backward(std::span<const double> history, std::span<const double> target) const {
  if (history.size() != cfg_.history || target.size() != cfg_.horizon) {
    throw InvalidInput("backward: history/target length mismatch");
  }
  Matrix x = Map<const VectorXd>(history.data(), idx(history.size()));
  Matrix t = Map<const VectorXd>(target.data(), idx(target.size()));
  std::vector<double> grad(params_.size());
  loss_gradient(x, t, grad);
  return grad;
}

double Forecaster::loss(const Matrix& inputs, const Matrix& targets) const {
  check_batch(inputs, &targets);
  Matrix y;
  forward_batch(inputs, y);
  return (y - targets).squaredNorm() / static_cast<double>(y.size());
}

// ---------------------------------------------------------------------------
// Linear

LinearModel::LinearModel(const ModelConfig& cfg) : Forecaster(cfg, cfg.horizon * (cfg.history + 1)) {}

void LinearModel::forward_batch(const Matrix& inputs, Matrix& outputs) const {
  check_batch(inputs, nullptr);
  outputs.noalias() = weight() * inputs;
  outputs.colwise() += bias();
}

double LinearModel::loss_gradient(const Matrix& inputs, const Matrix& targets, std::span<double> grad) const {
  check_batch(inputs, &targets);
  Matrix y;
  forward_batch(inputs, y);
  double loss = 0.0;
  const MatrixXd g = output_gradient(y, targets, loss);
  Map<MatrixXd>(grad.data(), ho(), hi()).noalias() = g * inputs.transpose();
  // Reduce into an aligned temporary: written straight into an unaligned Map,
  // Eigen picks a summation order that depends on the destination address.
  const VectorXd gb = g.rowwise().sum();
  Map<VectorXd>(grad.data() + ho() * hi(), ho()) = gb;
  return loss;
}

// ---------------------------------------------------------------------------
// DLinear

DLinearModel::DLinearModel(const ModelConfig& cfg) : Forecaster(cfg, 2 * cfg.horizon * (cfg.history + 1)) {
  const std::size_t h = cfg_.history;
  averaging_ = Matrix::Zero(idx(h), idx(h));
  // Columns of the operator are the moving average of unit impulses.
  std::vector<double> e(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    e[j] = 1.0;
    const auto col = dsp::moving_average(e, cfg_.kernel_size);
    for (std::size_t i = 0; i < h; ++i) averaging_(idx(i), idx(j)) = col[i];
    e[j] = 0.0;
  }
}

Matrix DLinearModel::trend(const Matrix& inputs) const { return averaging_ * inputs; }

void DLinearModel::forward_batch(const Matrix& inputs, Matrix& outputs) const {
  check_batch(inputs, nullptr);
  const Index f = idx(cfg_.horizon), h = idx(cfg_.history);
  const double* p = params_.data();
  Map<const MatrixXd> wt(p + trend_offset(), f, h);
  Map<const VectorXd> bt(p + trend_offset() + f * h, f);
  Map<const MatrixXd> ws(p + seasonal_offset(), f, h);
  Map<const VectorXd> bs(p + seasonal_offset() + f * h, f);
  const Matrix tr = trend(inputs);
  const Matrix se = inputs - tr;
  outputs.noalias() = wt * tr;
  outputs.noalias() += ws * se;
  outputs.colwise() += bt + bs;
}

double DLinearModel::loss_gradient(const Matrix& inputs, const Matrix& targets, std::span<double> grad) const {
  check_batch(inputs, &targets);
  const Index f = idx(cfg_.horizon), h = idx(cfg_.history);
  const Matrix tr = trend(inputs);
  const Matrix se = inputs - tr;
  Matrix y;
  forward_batch(inputs, y);
  double loss = 0.0;
  const MatrixXd g = output_gradient(y, targets, loss);
  const VectorXd gb = g.rowwise().sum();
  double* out = grad.data();
  Map<MatrixXd>(out + trend_offset(), f, h).noalias() = g * tr.transpose();
  Map<VectorXd>(out + trend_offset() + f * h, f) = gb;
  Map<MatrixXd>(out + seasonal_offset(), f, h).noalias() = g * se.transpose();
  Map<VectorXd>(out + seasonal_offset() + f * h, f) = gb;
  return loss;
}

// ---------------------------------------------------------------------------
// FITS

std::size_t FitsModel::count_input_bins(std::size_t history, double sample_rate_hz, double cutoff_hz) {
  const double limit = std::min(cutoff_hz, sample_rate_hz / 2.0);
  std::size_t count = 0;
  for (std::size_t k = 0; k <= history / 2; ++k) {
    // Relative slack so a cutoff on a bin edge keeps that bin.
    if (static_cast<double>(k) * sample_rate_hz / static_cast<double>(history) <= limit * (1.0 + 1e-12)) ++count;
  }
  return count;
}

FitsModel::FitsModel(const ModelConfig& cfg)
    : Forecaster(cfg, 0),
      k_in_(count_input_bins(cfg.history, cfg.sample_rate_hz, cfg.cutoff_hz)),
      k_out_((cfg.history + cfg.horizon) / 2 + 1) {
  params_.assign(2 * k_in_ * k_out_, 0.0);
  const std::size_t h = cfg_.history, f = cfg_.horizon, n = h + f;

  dft_cos_.resize(idx(k_in_), idx(h));
  dft_sin_.resize(idx(k_in_), idx(h));
  for (std::size_t k = 0; k < k_in_; ++k) {
    for (std::size_t t = 0; t < h; ++t) {
      const double angle = kTwoPi * static_cast<double>((k * t) % h) / static_cast<double>(h);
      dft_cos_(idx(k), idx(t)) = std::cos(angle);
      dft_sin_(idx(k), idx(t)) = -std::sin(angle);
    }
  }

  // Real inverse transform restricted to output samples t = H .. H+F-1.
  const double scale = amplitude_scale() / static_cast<double>(n);
  synth_re_.resize(idx(f), idx(k_out_));
  synth_im_.resize(idx(f), idx(k_out_));
  for (std::size_t j = 0; j < f; ++j) {
    const std::size_t t = h + j;
    for (std::size_t k = 0; k < k_out_; ++k) {
      const bool self_conjugate = k == 0 || (n % 2 == 0 && k == n / 2);
      const double weight = self_conjugate ? 1.0 : 2.0;
      const double angle = kTwoPi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      synth_re_(idx(j), idx(k)) = scale * weight * std::cos(angle);
      synth_im_(idx(j), idx(k)) = self_conjugate ? 0.0 : -scale * weight * std::sin(angle);
    }
  }
}

double FitsModel::amplitude_scale() const {
  return static_cast<double>(cfg_.history + cfg_.horizon) / static_cast<double>(cfg_.history);
}

void FitsModel::set_identity_embedding() {
  std::fill(params_.begin(), params_.end(), 0.0);
  Map<MatrixXd> wr(params_.data(), idx(k_out_), idx(k_in_));
  const double ratio = amplitude_scale();
  for (std::size_t k = 0; k < k_in_; ++k) {
    const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(k) * ratio));
    if (target < k_out_) wr(idx(target), idx(k)) = 1.0;
  }
}

void FitsModel::forward_batch(const Matrix& inputs, Matrix& outputs) const {
  check_batch(inputs, nullptr);
  const Index ko = idx(k_out_), ki = idx(k_in_);
  Map<const MatrixXd> wr(params_.data(), ko, ki);
  Map<const MatrixXd> wi(params_.data() + ko * ki, ko, ki);
  const Matrix xr = dft_cos_ * inputs;
  const Matrix xi = dft_sin_ * inputs;
  Matrix zr = wr * xr;
  zr.noalias() -= wi * xi;
  Matrix zi = wr * xi;
  zi.noalias() += wi * xr;
  outputs.noalias() = synth_re_ * zr;
  outputs.noalias() += synth_im_ * zi;
}

double FitsModel::loss_gradient(const Matrix& inputs, const Matrix& targets, std::span<double> grad) const {
  check_batch(inputs, &targets);
  const Index ko = idx(k_out_), ki = idx(k_in_);
  const Matrix xr = dft_cos_ * inputs;
  const Matrix xi = dft_sin_ * inputs;
  Matrix y;
  forward_batch(inputs, y);
  double loss = 0.0;
  const MatrixXd g = output_gradient(y, targets, loss);
  const Matrix gzr = synth_re_.transpose() * g;
  const Matrix gzi = synth_im_.transpose() * g;
  Map<MatrixXd> gwr(grad.data(), ko, ki);
  Map<MatrixXd> gwi(grad.data() + ko * ki, ko, ki);
  gwr.noalias() = gzr * xr.transpose();
  gwr.noalias() += gzi * xi.transpose();
  gwi.noalias() = gzi * xr.transpose();
  gwi.noalias() -= gzr * xi.transpose();
  return loss;
}

// ---------------------------------------------------------------------------
// MLP

MlpModel::MlpModel(const ModelConfig& cfg) : Forecaster(cfg, 0) {
  std::size_t in = cfg_.history, offset = 0;
  std::vector<std::size_t> widths = cfg_.hidden;
  widths.push_back(cfg_.horizon);
  for (std::size_t out : widths) {
    layers_.push_back({in, out, offset});
    offset += out * (in + 1);
    in = out;
  }
  params_.assign(offset, 0.0);
}

void MlpModel::forward_batch(const Matrix& inputs, Matrix& outputs) const {
  check_batch(inputs, nullptr);
  Matrix act = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    Map<const MatrixXd> w(params_.data() + L.offset, idx(L.out), idx(L.in));
    Map<const VectorXd> b(params_.data() + L.offset + L.out * L.in, idx(L.out));
    Matrix next = w * act;
    next.colwise() += b;
    if (l + 1 < layers_.size()) next = next.cwiseMax(0.0);
    act = std::move(next);
  }
  outputs = std::move(act);
}

double MlpModel::loss_gradient(const Matrix& inputs, const Matrix& targets, std::span<double> grad) const {
  check_batch(inputs, &targets);
  // Keep pre-activations; post-activations are recomputed from them.
  std::vector<Matrix> pre(layers_.size());
  std::vector<Matrix> post(layers_.size() + 1);
  post[0] = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    Map<const MatrixXd> w(params_.data() + L.offset, idx(L.out), idx(L.in));
    Map<const VectorXd> b(params_.data() + L.offset + L.out * L.in, idx(L.out));
    pre[l].noalias() = w * post[l];
    pre[l].colwise() += b;
    post[l + 1] = l + 1 < layers_.size() ? Matrix(pre[l].cwiseMax(0.0)) : pre[l];
  }
  double loss = 0.0;
  Matrix delta = output_gradient(post.back(), targets, loss);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& L = layers_[l];
    Map<MatrixXd>(grad.data() + L.offset, idx(L.out), idx(L.in)).noalias() = delta * post[l].transpose();
    const VectorXd gb = delta.rowwise().sum();  // aligned temporary, see LinearModel
    Map<VectorXd>(grad.data() + L.offset + L.out * L.in, idx(L.out)) = gb;
    if (l == 0) break;
    Map<const MatrixXd> w(params_.data() + L.offset, idx(L.out), idx(L.in));
    Matrix back = w.transpose() * delta;
    // ReLU subgradient is 0 at 0.
    delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Factory and checkpoints

std::unique_ptr<Forecaster> make_zero_model(const ModelConfig& cfg) {
  switch (cfg.kind) {
    case ModelKind::Linear: return std::make_unique<LinearModel>(cfg);
    case ModelKind::DLinear: return std::make_unique<DLinearModel>(cfg);
    case ModelKind::Fits: return std::make_unique<FitsModel>(cfg);
    case ModelKind::Mlp: return std::make_unique<MlpModel>(cfg);
  }
  throw ConfigError("make_model: unknown model kind");
}

std::unique_ptr<Forecaster> make_model(const ModelConfig& cfg, std::uint64_t seed) {
  auto model = make_zero_model(cfg);
  Engine engine = make_engine(seed);
  auto p = model->parameters();
  switch (cfg.kind) {
    case ModelKind::Linear:
    case ModelKind::DLinear:
      fill_uniform(p, 1.0 / std::sqrt(static_cast<double>(cfg.history)), engine);
      break;
    case ModelKind::Fits: {
      auto& fits = static_cast<FitsModel&>(*model);
      fits.set_identity_embedding();
      for (double& v : p) v += 0.01 * (2.0 * unit_uniform(engine) - 1.0);
      break;
    }
    case ModelKind::Mlp:
      for (const auto& L : static_cast<const MlpModel&>(*model).layers()) {
        fill_uniform(p.subspan(L.offset, L.out * (L.in + 1)), 1.0 / std::sqrt(static_cast<double>(L.in)), engine);
      }
      break;
  }
  return model;
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return {{"kind", to_string(cfg.kind)},          {"history", cfg.history},
          {"horizon", cfg.horizon},               {"kernel_size", cfg.kernel_size},
          {"cutoff_hz", cfg.cutoff_hz},           {"sample_rate_hz", cfg.sample_rate_hz},
          {"hidden", cfg.hidden}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.kind = parse_model_kind(j.at("kind").get<std::string>());
  cfg.history = j.value("history", cfg.history);
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.kernel_size = j.value("kernel_size", cfg.kernel_size);
  cfg.cutoff_hz = j.value("cutoff_hz", cfg.cutoff_hz);
  cfg.sample_rate_hz = j.value("sample_rate_hz", cfg.sample_rate_hz);
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.validate();
  return cfg;
}

nlohmann::json checkpoint_to_json(const Forecaster& model, std::string_view name) {
  const auto p = model.parameters();
  return {{"name", name},
          {"architecture", config_to_json(model.config())},
          {"parameter_count", p.size()},
          {"parameters", std::vector<double>(p.begin(), p.end())}};
}

std::unique_ptr<Forecaster> checkpoint_from_json(const nlohmann::json& j) {
  auto model = make_zero_model(config_from_json(j.at("architecture")));
  const auto values = j.at("parameters").get<std::vector<double>>();
  if (values.size() != model->parameter_count()) {
    throw InvalidInput("checkpoint: expected " + std::to_string(model->parameter_count()) +
                       " parameters, found " + std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), model->parameters().begin());
  return model;
}

void save_checkpoint(const Forecaster& model, std::string_view name, const std::filesystem::path& path) {
  io::write_atomic(path, checkpoint_to_json(model, name).dump(1) + "\n");
}

std::unique_ptr<Forecaster> load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(nlohmann::json::parse(io::read_text(path)));
}

}  // namespace timesynth::models
