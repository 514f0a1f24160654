#include "timesynth/reference.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "timesynth/dsp.hpp"
#include "timesynth/error.hpp"

namespace timesynth::reference {

namespace {

using models::DLinearModel;
using models::FitsModel;
using models::Forecaster;
using models::MlpModel;
using models::ModelKind;
using Complex = std::complex<double>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Column-major element (row, col) of a rows x cols block starting at `offset`.
double at(std::span<const double> p, std::size_t offset, std::size_t rows, std::size_t row, std::size_t col) {
  return p[offset + row + col * rows];
}

double& at(std::span<double> p, std::size_t offset, std::size_t rows, std::size_t row, std::size_t col) {
  return p[offset + row + col * rows];
}

// y = W x + b for a block W (rows x cols) followed by b (rows).
std::vector<double> affine(std::span<const double> p, std::size_t offset, std::size_t rows,
                           std::span<const double> x) {
  const std::size_t cols = x.size();
  std::vector<double> y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = p[offset + rows * cols + i];
    for (std::size_t j = 0; j < cols; ++j) acc += at(p, offset, rows, i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

// Accumulates dW += g x^T, db += g.
void affine_grad(std::span<double> grad, std::size_t offset, std::span<const double> g,
                 std::span<const double> x) {
  const std::size_t rows = g.size(), cols = x.size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) at(grad, offset, rows, i, j) += g[i] * x[j];
    grad[offset + rows * cols + i] += g[i];
  }
}

struct FitsShape {
  std::size_t h, f, n, k_in, k_out;
  double scale;
};

FitsShape fits_shape(const FitsModel& m) {
  const std::size_t h = m.history(), f = m.horizon();
  return {h, f, h + f, m.input_bins(), m.output_bins(), static_cast<double>(h + f) / static_cast<double>(h)};
}

std::vector<Complex> rfft_bins(std::span<const double> x, std::size_t count) {
  const std::size_t n = x.size();
  std::vector<Complex> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    Complex acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -kTwoPi * static_cast<double>(k * t % n) / static_cast<double>(n));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<Complex> fits_spectrum(const FitsModel& m, std::span<const Complex> x_bins) {
  const auto s = fits_shape(m);
  const auto p = m.parameters();
  const std::size_t im = s.k_out * s.k_in;
  std::vector<Complex> z(s.k_out);
  for (std::size_t r = 0; r < s.k_out; ++r) {
    Complex acc = 0.0;
    for (std::size_t c = 0; c < s.k_in; ++c) {
      acc += Complex(at(p, 0, s.k_out, r, c), at(p, im, s.k_out, r, c)) * x_bins[c];
    }
    z[r] = acc;
  }
  return z;
}

// Real inverse FFT of a one-sided spectrum to n samples (imaginary parts of
// self-conjugate bins ignored), evaluated at sample t.
double irfft_sample(std::span<const Complex> z, std::size_t n, std::size_t t) {
  double acc = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const bool self_conjugate = k == 0 || (n % 2 == 0 && k == n / 2);
    const Complex w = std::polar(1.0, kTwoPi * static_cast<double>(k * t % n) / static_cast<double>(n));
    acc += self_conjugate ? z[k].real() * w.real() : 2.0 * (z[k] * w).real();
  }
  return acc / static_cast<double>(n);
}

std::vector<double> forward_fits(const FitsModel& m, std::span<const double> x) {
  const auto s = fits_shape(m);
  const auto z = fits_spectrum(m, rfft_bins(x, s.k_in));
  std::vector<double> y(s.f);
  for (std::size_t j = 0; j < s.f; ++j) y[j] = s.scale * irfft_sample(z, s.n, s.h + j);
  return y;
}

// dL/dZ_k for y_j = scale * irfft(Z)[H+j], with real and imaginary parts
// treated as independent reals.
void fits_grad(const FitsModel& m, std::span<const double> x, std::span<const double> gy, std::span<double> grad) {
  const auto s = fits_shape(m);
  const auto xb = rfft_bins(x, s.k_in);
  std::vector<Complex> gz(s.k_out);  // (dL/dRe Z, dL/dIm Z)
  for (std::size_t k = 0; k < s.k_out; ++k) {
    const bool self_conjugate = k == 0 || (s.n % 2 == 0 && k == s.n / 2);
    double gre = 0.0, gim = 0.0;
    for (std::size_t j = 0; j < s.f; ++j) {
      const double angle = kTwoPi * static_cast<double>(k * (s.h + j) % s.n) / static_cast<double>(s.n);
      const double c = s.scale / static_cast<double>(s.n) * (self_conjugate ? 1.0 : 2.0);
      gre += gy[j] * c * std::cos(angle);
      if (!self_conjugate) gim += -gy[j] * c * std::sin(angle);
    }
    gz[k] = {gre, gim};
  }
  // Z = W X: Re Z = Wr Xr - Wi Xi, Im Z = Wr Xi + Wi Xr.
  const std::size_t im = s.k_out * s.k_in;
  for (std::size_t r = 0; r < s.k_out; ++r) {
    for (std::size_t c = 0; c < s.k_in; ++c) {
      at(grad, 0, s.k_out, r, c) += gz[r].real() * xb[c].real() + gz[r].imag() * xb[c].imag();
      at(grad, im, s.k_out, r, c) += -gz[r].real() * xb[c].imag() + gz[r].imag() * xb[c].real();
    }
  }
}

struct MlpTrace {
  std::vector<std::vector<double>> pre;   // per layer
  std::vector<std::vector<double>> post;  // post[0] = input
};

MlpTrace mlp_trace(const MlpModel& m, std::span<const double> x) {
  MlpTrace tr;
  tr.post.emplace_back(x.begin(), x.end());
  const auto& layers = m.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto a = affine(m.parameters(), layers[l].offset, layers[l].out, tr.post.back());
    auto h = a;
    if (l + 1 < layers.size()) {
      for (double& v : h) v = v > 0.0 ? v : 0.0;
    }
    tr.pre.push_back(std::move(a));
    tr.post.push_back(std::move(h));
  }
  return tr;
}

std::vector<double> forward_dlinear(const DLinearModel& m, std::span<const double> x) {
  const auto trend = dsp::moving_average(x, m.config().kernel_size);
  std::vector<double> seasonal(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) seasonal[i] = x[i] - trend[i];
  auto y = affine(m.parameters(), m.trend_offset(), m.horizon(), trend);
  const auto ys = affine(m.parameters(), m.seasonal_offset(), m.horizon(), seasonal);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += ys[i];
  return y;
}

}  // namespace

std::vector<double> forward(const Forecaster& model, std::span<const double> history) {
  if (history.size() != model.history()) throw InvalidInput("reference::forward: history length mismatch");
  switch (model.kind()) {
    case ModelKind::Linear: return affine(model.parameters(), 0, model.horizon(), history);
    case ModelKind::DLinear: return forward_dlinear(static_cast<const DLinearModel&>(model), history);
    case ModelKind::Fits: return forward_fits(static_cast<const FitsModel&>(model), history);
    case ModelKind::Mlp: return mlp_trace(static_cast<const MlpModel&>(model), history).post.back();
  }
  throw InvalidInput("reference::forward: unknown model");
}

double loss_gradient(const Forecaster& model, std::span<const std::vector<double>> histories,
                     std::span<const std::vector<double>> targets, std::span<double> grad) {
  if (histories.empty() || histories.size() != targets.size()) {
    throw InvalidInput("reference::loss_gradient: batch size mismatch");
  }
  if (grad.size() != model.parameter_count()) throw InvalidInput("reference::loss_gradient: gradient size");
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t f = model.horizon();
  const double inv = 1.0 / static_cast<double>(histories.size() * f);
  double loss = 0.0;

  for (std::size_t b = 0; b < histories.size(); ++b) {
    const auto& x = histories[b];
    const auto& target = targets[b];
    const auto y = forward(model, x);
    std::vector<double> gy(f);
    for (std::size_t i = 0; i < f; ++i) {
      const double d = y[i] - target[i];
      loss += d * d * inv;
      gy[i] = 2.0 * d * inv;
    }

    switch (model.kind()) {
      case ModelKind::Linear:
        affine_grad(grad, 0, gy, x);
        break;
      case ModelKind::DLinear: {
        const auto& m = static_cast<const DLinearModel&>(model);
        const auto trend = dsp::moving_average(x, m.config().kernel_size);
        std::vector<double> seasonal(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) seasonal[i] = x[i] - trend[i];
        affine_grad(grad, m.trend_offset(), gy, trend);
        affine_grad(grad, m.seasonal_offset(), gy, seasonal);
        break;
      }
      case ModelKind::Fits:
        fits_grad(static_cast<const FitsModel&>(model), x, gy, grad);
        break;
      case ModelKind::Mlp: {
        const auto& m = static_cast<const MlpModel&>(model);
        const auto& layers = m.layers();
        const auto tr = mlp_trace(m, x);
        std::vector<double> delta = gy;
        for (std::size_t l = layers.size(); l-- > 0;) {
          affine_grad(grad, layers[l].offset, delta, tr.post[l]);
          if (l == 0) break;
          std::vector<double> back(layers[l].in, 0.0);
          for (std::size_t i = 0; i < layers[l].out; ++i) {
            for (std::size_t j = 0; j < layers[l].in; ++j) {
              back[j] += at(model.parameters(), layers[l].offset, layers[l].out, i, j) * delta[i];
            }
          }
          for (std::size_t j = 0; j < back.size(); ++j) {
            if (!(tr.pre[l - 1][j] > 0.0)) back[j] = 0.0;
          }
          delta = std::move(back);
        }
        break;
      }
    }
  }
  return loss;
}

}  // namespace timesynth::reference
