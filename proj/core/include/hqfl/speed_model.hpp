// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hardware-related training time and speed significance.
//
// Memory per batch is affine, mem(B) = c0 + c1 * B, and throughput is the
// available compute rate scaled by a batch saturation term
// sat(B) = B / (B + B_half). QAT pays an extra factor that fades as the
// batch grows.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hqfl/model.hpp"

namespace hqfl::speed {

inline constexpr double kOpsPerParam = 6.0;

struct HardwareProfile {
  double batch_mem_intercept_mb = 0.0;
  // Absent means derived from the model: 4 bytes per activation unit per sample.
  std::optional<double> batch_mem_slope_mb;
  double batch_half_saturation = 32.0;
  double qat_overhead_peak = 1.5;

  void validate() const;
  double slope_for(const ModelSpec& model) const;

  friend bool operator==(const HardwareProfile&, const HardwareProfile&) = default;
};

double derived_batch_mem_slope_mb(const ModelSpec& model);

struct SpeedReport {
  std::string client_id;
  int chosen_batch = 1;
  double est_time_s = 0.0;
  double sig_speed = 0.0;
};

// Largest B with c0 + c1 * B <= mem_avail_frac * memory_mb, capped at the data
// volume. A caller-fixed batch size is used verbatim once it fits.
int select_batch_size(const ClientProfile& profile, const HardwareProfile& hw, const ModelSpec& model);

double batch_saturation(const HardwareProfile& hw, int batch);

// Parameter updates per second.
double effective_throughput(const ClientProfile& profile, const HardwareProfile& hw, int batch);

// 1 for PTQ; 1 + qat_overhead_peak * (1 - sat(B)) for QAT.
double strategy_factor(const HardwareProfile& hw, QuantStrategy strategy, int batch);

// ceil(volume / batch) * epochs * params / throughput * factor.
double step_time(std::int64_t volume, int batch, int epochs, std::int64_t params, double throughput,
                 double factor = 1.0);

// Strategy-free time when `strategy` is empty, which is what the
// significance analysis uses.
double training_time(const ClientProfile& profile, const HardwareProfile& hw, const ModelSpec& model,
                     std::optional<QuantStrategy> strategy = std::nullopt);

// Sig_m = T_m / (T_max - T_min); all ones when every time is equal.
std::map<std::string, double> speed_significance(const std::map<std::string, double>& times);

struct ClientHardware {
  ClientProfile profile;
  HardwareProfile hardware;
};

std::vector<SpeedReport> profile_clients(const std::vector<ClientHardware>& clients,
                                         const ModelSpec& model);

}  // namespace hqfl::speed
