#pragma once

// Scalar, one-sample-at-a-time implementations of the forecasters. They read
// the same flat parameter vector as the batched Eigen kernels but share no
// code with them: DLinear decomposes through dsp::moving_average and FITS
// evaluates its transforms as explicit complex sums. Used as the serial
// reference in tests and in the benchmark.

#include <span>
#include <vector>

#include "timesynth/models.hpp"

namespace timesynth::reference {

std::vector<double> forward(const models::Forecaster& model, std::span<const double> history);

// Batch-mean horizon MSE and its parameter gradient. `histories` and
// `targets` hold one sample each.
double loss_gradient(const models::Forecaster& model, std::span<const std::vector<double>> histories,
                     std::span<const std::vector<double>> targets, std::span<double> grad);

}  // namespace timesynth::reference
