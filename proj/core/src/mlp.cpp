// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hqfl/error.hpp"
#include "hqfl/rng.hpp"

namespace hqfl::nn {

namespace {

struct SampleTrace {
  // Per layer: input activation, raw pre-activation, post-quantization value.
  std::vector<std::vector<double>> input;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
  std::vector<double> logits;
};

void affine(const DenseLayer& layer, std::span<const double> x, std::vector<double>& z) {
  z.assign(layer.bias.begin(), layer.bias.end());
  for (int o = 0; o < layer.out; ++o) {
    const double* w = layer.weight.data() + static_cast<std::size_t>(o) * layer.in;
    double acc = z[o];
    for (int i = 0; i < layer.in; ++i) acc += w[i] * x[i];
    z[o] = acc;
  }
}

void forward(const Mlp& model, std::span<const double> x, const ActivationParams* act, SampleTrace& t) {
  const auto& layers = model.layers();
  t.input.resize(layers.size());
  t.pre.resize(layers.size());
  t.post.resize(layers.size());
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    t.input[l] = a;
    affine(layers[l], a, t.pre[l]);
    t.post[l] = t.pre[l];
    if (act) {
      for (auto& v : t.post[l]) v = quant::fake_quant_value(v, (*act)[l]);
    }
    if (l + 1 < layers.size()) {
      a = t.post[l];
      for (auto& v : a) v = std::max(v, 0.0);
    }
  }
  t.logits = t.post.back();
}

// Returns -log softmax(logits)[label] and writes softmax - onehot into grad.
double cross_entropy(const std::vector<double>& logits, int label, std::vector<double>& grad) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    grad[k] = std::exp(logits[k] - peak);
    total += grad[k];
  }
  for (auto& g : grad) g /= total;
  const double loss = -(logits[label] - peak - std::log(total));
  grad[label] -= 1.0;
  return loss;
}

std::vector<DenseLayer> zeros_like(const Mlp& model) {
  std::vector<DenseLayer> g;
  for (const auto& l : model.layers()) {
    g.push_back({l.in, l.out, std::vector<double>(l.weight.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)});
  }
  return g;
}

void check_act(const Mlp& model, const ActivationParams* act) {
  if (act && act->size() != model.layers().size()) {
    throw ShapeMismatch("activation params must have one entry per layer");
  }
}

EpochResult train_epoch(Mlp model, const Dataset& data, const TrainHyper& hyper, const ActivationParams* act) {
  if (data.size() == 0) throw InputError("training needs a non-empty dataset");
  if (!(hyper.lr >= 0.0) || hyper.batch < 1) throw InputError("invalid training hyperparameters");
  check_act(model, act);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(hyper.seed);
  std::shuffle(order.begin(), order.end(), rng);

  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
    const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
    const std::span<const std::size_t> idx(order.data() + start, stop - start);
    const auto lg = loss_and_gradient(model, data, idx, act);
    if (!std::isfinite(lg.loss)) throw NumericalDivergence("training loss became non-finite");
    loss_sum += lg.loss;
    ++batches;
    auto& layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t i = 0; i < layers[l].weight.size(); ++i) layers[l].weight[i] -= hyper.lr * lg.grad[l].weight[i];
      for (std::size_t i = 0; i < layers[l].bias.size(); ++i) layers[l].bias[i] -= hyper.lr * lg.grad[l].bias[i];
    }
  }
  return {std::move(model), loss_sum / static_cast<double>(batches)};
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.dim = dim;
  out.num_classes = num_classes;
  out.features.reserve(indices.size() * dim);
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    const auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

std::vector<double> Dataset::column(std::size_t j) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = features[i * dim + j];
  return out;
}

Mlp::Mlp(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < spec.layer_widths.size(); ++i) {
    DenseLayer layer;
    layer.in = spec.layer_widths[i];
    layer.out = spec.layer_widths[i + 1];
    const double limit = std::sqrt(6.0 / (layer.in + layer.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    layer.weight.resize(static_cast<std::size_t>(layer.in) * layer.out);
    for (auto& w : layer.weight) w = dist(rng);
    layer.bias.assign(layer.out, 0.0);
    layers_.push_back(std::move(layer));
  }
}

Mlp Mlp::from_tensors(const ModelSpec& spec, const std::vector<std::vector<double>>& tensors) {
  spec.validate();
  if (tensors.size() != static_cast<std::size_t>(spec.tensor_count())) {
    throw ShapeMismatch("tensor count does not match the model spec");
  }
  Mlp m;
  for (std::size_t i = 0; i + 1 < spec.layer_widths.size(); ++i) {
    DenseLayer layer{spec.layer_widths[i], spec.layer_widths[i + 1], tensors[2 * i], tensors[2 * i + 1]};
    if (layer.weight.size() != static_cast<std::size_t>(layer.in) * layer.out ||
        layer.bias.size() != static_cast<std::size_t>(layer.out)) {
      throw ShapeMismatch("tensor shape does not match layer " + std::to_string(i));
    }
    m.layers_.push_back(std::move(layer));
  }
  return m;
}

std::vector<std::vector<double>> Mlp::tensors() const {
  std::vector<std::vector<double>> out;
  for (const auto& l : layers_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

std::vector<std::vector<std::size_t>> Mlp::tensor_shapes() const {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& l : layers_) {
    out.push_back({static_cast<std::size_t>(l.out), static_cast<std::size_t>(l.in)});
    out.push_back({static_cast<std::size_t>(l.out)});
  }
  return out;
}

ActivationParams calibrate_activations(const Mlp& model, const Dataset& data) {
  if (data.size() == 0) throw InputError("calibration needs a non-empty dataset");
  const auto& layers = model.layers();
  ActivationParams params;
  std::vector<std::vector<double>> acts(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = data.row(i);
    acts[i].assign(r.begin(), r.end());
  }
  std::vector<double> z;
  std::vector<std::vector<double>> pre(data.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    double peak = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      affine(layers[l], acts[i], pre[i]);
      for (double v : pre[i]) {
        if (!std::isfinite(v)) throw NumericalDivergence("non-finite activation during calibration");
        peak = std::max(peak, std::abs(v));
      }
    }
    const double probe[] = {peak};
    params.push_back(quant::calibrate(probe));
    if (l + 1 < layers.size()) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        acts[i] = pre[i];
        for (auto& v : acts[i]) v = std::max(quant::fake_quant_value(v, params.back()), 0.0);
      }
    }
  }
  return params;
}

LossGradient loss_and_gradient(const Mlp& model, const Dataset& data, std::span<const std::size_t> indices,
                               const ActivationParams* act) {
  check_act(model, act);
  const auto& layers = model.layers();
  LossGradient out;
  out.grad = zeros_like(model);
  if (indices.empty()) return out;

  SampleTrace t;
  std::vector<double> delta;
  std::vector<double> prev;
  for (auto idx : indices) {
    forward(model, data.row(idx), act, t);
    out.loss += cross_entropy(t.logits, data.labels[idx], delta);
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& layer = layers[l];
      // delta holds d loss / d post[l]; map it through the quantizer.
      if (act) {
        for (int o = 0; o < layer.out; ++o) {
          if (!quant::in_pass_band(t.pre[l][o], (*act)[l])) delta[o] = 0.0;
        }
      }
      auto& g = out.grad[l];
      for (int o = 0; o < layer.out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        double* gw = g.weight.data() + static_cast<std::size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i) gw[i] += d * t.input[l][i];
        g.bias[o] += d;
      }
      if (l == 0) break;
      prev.assign(layer.in, 0.0);
      for (int o = 0; o < layer.out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* w = layer.weight.data() + static_cast<std::size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i) prev[i] += w[i] * d;
      }
      // ReLU of the previous layer.
      for (int i = 0; i < layer.in; ++i) {
        if (!(t.post[l - 1][i] > 0.0)) prev[i] = 0.0;
      }
      delta.swap(prev);
    }
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  out.loss *= inv;
  for (auto& g : out.grad) {
    for (auto& v : g.weight) v *= inv;
    for (auto& v : g.bias) v *= inv;
  }
  return out;
}

EpochResult train_epoch_ptq(Mlp model, const Dataset& data, const TrainHyper& hyper) {
  return train_epoch(std::move(model), data, hyper, nullptr);
}

EpochResult train_epoch_qat(Mlp model, const Dataset& data, const TrainHyper& hyper,
                            const ActivationParams& act) {
  return train_epoch(std::move(model), data, hyper, &act);
}

EvalResult evaluate(const Mlp& model, const Dataset& data, bool quantized) {
  if (data.size() == 0) throw InputError("evaluation needs a non-empty dataset");
  ActivationParams act;
  if (quantized) act = calibrate_activations(model, data);
  SampleTrace t;
  std::vector<double> scratch;
  EvalResult r;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward(model, data.row(i), quantized ? &act : nullptr, t);
    r.loss += cross_entropy(t.logits, data.labels[i], scratch);
    const auto best = std::max_element(t.logits.begin(), t.logits.end()) - t.logits.begin();
    if (best == data.labels[i]) ++correct;
  }
  r.loss /= static_cast<double>(data.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return r;
}

}  // namespace hqfl::nn
