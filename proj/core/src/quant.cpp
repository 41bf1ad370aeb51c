// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/quant.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "hqfl/error.hpp"

namespace hqfl::quant {

std::size_t QuantizedTensor::numel() const {
  if (shape.empty()) return codes.size();
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

QuantParams calibrate(std::span<const double> values) {
  if (values.empty()) throw InputError("cannot calibrate an empty tensor");
  double peak = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw NonFiniteInput("calibration input contains a non-finite value");
    peak = std::max(peak, std::abs(v));
  }
  return {std::max(peak, kScaleFloor) / kCodeMax, 0, 8};
}

std::int8_t quantize_value(double x, const QuantParams& params) {
  const double q = std::round(x / params.scale) + params.zero_point;
  return static_cast<std::int8_t>(std::clamp(q, double{kCodeMin}, double{kCodeMax}));
}

double dequantize_value(std::int8_t code, const QuantParams& params) {
  return params.scale * static_cast<double>(static_cast<int>(code) - params.zero_point);
}

QuantizedTensor quantize(std::span<const double> x, const QuantParams& params,
                         std::vector<std::size_t> shape) {
  QuantizedTensor qt;
  qt.params = params;
  qt.shape = shape.empty() ? std::vector<std::size_t>{x.size()} : std::move(shape);
  if (qt.numel() != x.size()) throw ShapeMismatch("tensor shape does not match its element count");
  qt.codes.reserve(x.size());
  for (double v : x) qt.codes.push_back(quantize_value(v, params));
  return qt;
}

std::vector<double> dequantize(const QuantizedTensor& qt) {
  std::vector<double> out;
  out.reserve(qt.codes.size());
  for (auto c : qt.codes) out.push_back(dequantize_value(c, qt.params));
  return out;
}

QuantizedTensor quantize_calibrated(std::span<const double> x, std::vector<std::size_t> shape) {
  return quantize(x, calibrate(x), std::move(shape));
}

double fake_quant_value(double x, const QuantParams& params) {
  return dequantize_value(quantize_value(x, params), params);
}

std::vector<double> fake_quant_forward(std::span<const double> x, const QuantParams& params) {
  std::vector<double> out;
  out.reserve(x.size());
  for (double v : x) out.push_back(fake_quant_value(v, params));
  return out;
}

bool in_pass_band(double x, const QuantParams& params) {
  return std::abs(x / params.scale + params.zero_point) <= kCodeMax;
}

std::vector<double> fake_quant_backward(std::span<const double> upstream, std::span<const double> x,
                                        const QuantParams& params) {
  if (upstream.size() != x.size()) throw ShapeMismatch("gradient and input sizes differ");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = in_pass_band(x[i], params) ? upstream[i] : 0.0;
  return out;
}

}  // namespace hqfl::quant
