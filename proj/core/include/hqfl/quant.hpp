// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Symmetric per-tensor INT8 quantization.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hqfl::quant {

inline constexpr int kCodeMin = -128;
inline constexpr int kCodeMax = 127;
inline constexpr double kScaleFloor = 1e-12;
// Serialized per-tensor overhead: scale as 8 bytes, zero point as 4.
inline constexpr std::int64_t kTensorOverheadBytes = 12;

struct QuantParams {
  double scale = 1.0;
  int zero_point = 0;
  int bits = 8;

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

struct QuantizedTensor {
  std::vector<std::int8_t> codes;
  QuantParams params;
  std::vector<std::size_t> shape;

  std::size_t numel() const;
  std::int64_t wire_bytes() const { return static_cast<std::int64_t>(codes.size()) + kTensorOverheadBytes; }

  friend bool operator==(const QuantizedTensor&, const QuantizedTensor&) = default;
};

// s = max(|min|, |max|, 1e-12) / 127, z = 0. Throws NonFiniteInput.
QuantParams calibrate(std::span<const double> values);

// Round half away from zero, then clamp to [-128, 127].
std::int8_t quantize_value(double x, const QuantParams& params);
double dequantize_value(std::int8_t code, const QuantParams& params);

QuantizedTensor quantize(std::span<const double> x, const QuantParams& params,
                         std::vector<std::size_t> shape = {});
std::vector<double> dequantize(const QuantizedTensor& qt);

// Calibrate on the tensor itself and quantize.
QuantizedTensor quantize_calibrated(std::span<const double> x, std::vector<std::size_t> shape = {});

double fake_quant_value(double x, const QuantParams& params);
std::vector<double> fake_quant_forward(std::span<const double> x, const QuantParams& params);

// Straight-through estimator: upstream gradient where |x / s + z| <= 127,
// zero where the forward pass clamps.
bool in_pass_band(double x, const QuantParams& params);
std::vector<double> fake_quant_backward(std::span<const double> upstream, std::span<const double> x,
                                        const QuantParams& params);

}  // namespace hqfl::quant
