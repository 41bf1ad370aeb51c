// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense ReLU network with a softmax cross-entropy head, trained by plain SGD
// either in full precision (PTQ) or with fake quantization on every layer's
// pre-activation (QAT).

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hqfl/model.hpp"
#include "hqfl/quant.hpp"

namespace hqfl::nn {

struct Dataset {
  std::size_t dim = 0;
  int num_classes = 0;
  std::vector<double> features;  // row-major, size() * dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
  Dataset subset(std::span<const std::size_t> indices) const;
  // Feature j across all rows.
  std::vector<double> column(std::size_t j) const;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

class Mlp {
 public:
  Mlp() = default;
  // Glorot-uniform weights, zero biases.
  Mlp(const ModelSpec& spec, std::uint64_t seed);
  // Tensors ordered weight_0, bias_0, weight_1, bias_1, ...
  static Mlp from_tensors(const ModelSpec& spec, const std::vector<std::vector<double>>& tensors);

  std::vector<std::vector<double>> tensors() const;
  std::vector<std::vector<std::size_t>> tensor_shapes() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

// One QuantParams per layer, applied to that layer's pre-activation.
using ActivationParams = std::vector<quant::QuantParams>;

// Layer-by-layer calibration over the whole dataset, each layer seeing the
// fake-quantized output of the layers before it.
ActivationParams calibrate_activations(const Mlp& model, const Dataset& data);

struct LossGradient {
  double loss = 0.0;  // mean over the batch
  std::vector<DenseLayer> grad;
};

// Mean cross-entropy and its gradient over `indices`. With `act` set the
// forward pass fake-quantizes pre-activations and the backward pass uses the
// straight-through estimator.
LossGradient loss_and_gradient(const Mlp& model, const Dataset& data, std::span<const std::size_t> indices,
                               const ActivationParams* act = nullptr);

struct TrainHyper {
  double lr = 0.05;
  int batch = 32;
  std::uint64_t seed = 0;
};

struct EpochResult {
  Mlp model;
  double mean_loss = 0.0;
};

// Both throw NumericalDivergence when a batch loss stops being finite.
EpochResult train_epoch_ptq(Mlp model, const Dataset& data, const TrainHyper& hyper);
EpochResult train_epoch_qat(Mlp model, const Dataset& data, const TrainHyper& hyper,
                            const ActivationParams& act);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

// `quantized` runs INT8-style inference: activations fake-quantized with
// parameters calibrated on `data`.
EvalResult evaluate(const Mlp& model, const Dataset& data, bool quantized);

}  // namespace hqfl::nn
