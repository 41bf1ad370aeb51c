// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synchronous quantized FedAvg over an aggregation tree.
//
// Training is real (the toy MLP is actually trained on synthetic client data)
// while the clock is simulated: client compute time comes from the speed
// model and link time from bytes / bandwidth along the path to the server.
// Each round: broadcast INT8 weights, train every client, quantize uplinks,
// aggregate bottom-up with dequantize / average / requantize, evaluate.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hqfl/distfit.hpp"
#include "hqfl/mlp.hpp"
#include "hqfl/model.hpp"
#include "hqfl/quant.hpp"
#include "hqfl/speed_model.hpp"

namespace hqfl::sim {

// Per-client feature noise: draws from `noise`, standardized, times noise_scale.
struct DataSource {
  distfit::Distribution noise{distfit::Family::Normal, {0.0, 1.0}};
  double noise_scale = 1.0;

  friend bool operator==(const DataSource&, const DataSource&) = default;
};

struct ClientSpec {
  ClientProfile profile;
  speed::HardwareProfile hardware;
  DataSource data;
  std::string parent;  // empty means the server
  std::optional<double> bandwidth_mbps;

  friend bool operator==(const ClientSpec&, const ClientSpec&) = default;
};

struct AggregatorSpec {
  std::string id;
  std::string parent;  // empty means the server
  std::optional<double> bandwidth_mbps;

  friend bool operator==(const AggregatorSpec&, const AggregatorSpec&) = default;
};

enum class Weighting { Volume, Uniform };

std::string_view to_string(Weighting w);
Weighting parse_weighting(std::string_view text);

struct SimConfig {
  int rounds = 20;
  std::uint64_t global_seed = 42;
  double comm_bandwidth_mbps = 100.0;
  double lambda = 0.25;
  double learning_rate = 0.05;
  double dirichlet_concentration = 0.5;
  int test_size = 2000;
  double class_separation = 3.0;
  double aggregation_latency_s = 0.01;
  Weighting weighting = Weighting::Volume;
  bool quantized_eval = true;
  std::string server_id = "server";
  ModelSpec model;
  std::vector<ClientSpec> clients;
  std::vector<AggregatorSpec> aggregators;

  void validate() const;
  Topology topology() const;
  std::vector<std::string> client_ids() const;
  const ClientSpec& client(std::string_view id) const;
  // Uplink bandwidth of the edge from `node_id` to its parent.
  double link_bandwidth(std::string_view node_id) const;
  int num_classes() const { return model.layer_widths.back(); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(model.layer_widths.front()); }

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct SyntheticDataset {
  std::map<std::string, nn::Dataset> clients;
  nn::Dataset test;
  std::vector<std::vector<double>> class_centers;
};

// Gaussian-mixture style classification task: class centers are shared, the
// per-client feature noise follows that client's DataSource, and label
// proportions come from a Dirichlet draw.
SyntheticDataset generate_data(const SimConfig& config);

// Same label proportions (largest remainder), at least one row.
nn::Dataset stratified_subsample(const nn::Dataset& data, double fraction, std::uint64_t seed);

struct RoundHyper {
  double lr = 0.05;
  int round_index = 1;
  std::uint64_t global_seed = 42;
};

struct ClientRoundResult {
  std::vector<quant::QuantizedTensor> weights;
  double train_time_s = 0.0;
  std::int64_t bytes_up = 0;
  double last_epoch_loss = 0.0;
};

ClientRoundResult client_round(const ClientSpec& client, const ModelSpec& model,
                               const std::vector<quant::QuantizedTensor>& global_weights,
                               QuantStrategy strategy, const nn::Dataset& data, const RoundHyper& hyper);

std::int64_t payload_bytes(const std::vector<quant::QuantizedTensor>& tensors);

// Normalized aggregation weights (sum to 1).
std::vector<double> aggregation_weights(std::span<const double> volumes, Weighting weighting);

struct TensorUpdate {
  quant::QuantizedTensor tensor;
  double volume = 1.0;
};

// Dequantize, weighted mean, recalibrate and requantize.
quant::QuantizedTensor aggregate(std::span<const TensorUpdate> children, Weighting weighting = Weighting::Volume);

struct ModelUpdate {
  std::vector<quant::QuantizedTensor> tensors;
  double volume = 1.0;
};

std::vector<quant::QuantizedTensor> aggregate_model(std::span<const ModelUpdate> children,
                                                    Weighting weighting = Weighting::Volume);

struct ClientRoundStats {
  double train_time_s = 0.0;
  double comm_time_s = 0.0;
  double completion_s = 0.0;
  std::int64_t bytes_up = 0;
  std::int64_t bytes_down = 0;
};

struct RoundRecord {
  int round = 0;
  std::map<std::string, ClientRoundStats> clients;
  double wall_clock_s = 0.0;
  double accuracy = 0.0;
  double loss = 0.0;
};

struct RunOptions {
  std::optional<int> rounds;
  // Fraction of each client's data actually trained on; the simulated clock
  // still charges the configured data volume.
  double data_fraction = 1.0;
  std::function<void(const RoundRecord&)> on_round;
};

struct SimResult {
  std::vector<RoundRecord> rounds;
  std::vector<quant::QuantizedTensor> final_weights;

  double total_wall_clock_s() const;
};

SimResult run(const SimConfig& config, const StrategyAssignment& assignment, const RunOptions& options = {});
SimResult run(const SimConfig& config, const SyntheticDataset& data, const StrategyAssignment& assignment,
              const RunOptions& options = {});

// One JSON object per line with keys round, client_times, wall_clock_s,
// bytes_up, bytes_down, accuracy, loss.
std::string to_jsonl(const RoundRecord& record);
RoundRecord parse_jsonl_line(std::string_view line);

}  // namespace hqfl::sim
