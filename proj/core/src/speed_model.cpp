// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/speed_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hqfl/error.hpp"

namespace hqfl::speed {

void HardwareProfile::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(batch_mem_intercept_mb) || batch_mem_intercept_mb < 0.0)
    throw InputError("batch_mem_intercept_mb must be finite and >= 0");
  if (batch_mem_slope_mb && !(finite(*batch_mem_slope_mb) && *batch_mem_slope_mb > 0.0))
    throw InputError("batch_mem_slope_mb must be finite and > 0");
  if (!(finite(batch_half_saturation) && batch_half_saturation > 0.0))
    throw InputError("batch_half_saturation must be finite and > 0");
  if (!(finite(qat_overhead_peak) && qat_overhead_peak >= 0.0))
    throw InputError("qat_overhead_peak must be finite and >= 0");
}

double derived_batch_mem_slope_mb(const ModelSpec& model) {
  const double units = std::accumulate(model.layer_widths.begin(), model.layer_widths.end(), 0.0);
  return 4.0 * units * 1e-6;
}

double HardwareProfile::slope_for(const ModelSpec& model) const {
  return batch_mem_slope_mb ? *batch_mem_slope_mb : derived_batch_mem_slope_mb(model);
}

int select_batch_size(const ClientProfile& profile, const HardwareProfile& hw, const ModelSpec& model) {
  const double cap = profile.mem_avail_frac * profile.memory_mb;
  const double c0 = hw.batch_mem_intercept_mb;
  const double c1 = hw.slope_for(model);
  auto fits = [&](double b) { return c0 + c1 * b <= cap; };

  if (profile.batch_size) {
    if (!fits(*profile.batch_size)) {
      throw InfeasibleMemory("client '" + profile.id + "': batch " + std::to_string(*profile.batch_size) +
                             " exceeds the memory budget");
    }
    return *profile.batch_size;
  }
  if (!fits(1.0)) {
    throw InfeasibleMemory("client '" + profile.id + "': even batch 1 exceeds the memory budget");
  }
  const double volume = static_cast<double>(profile.data_volume);
  double b = std::min(std::floor((cap - c0) / c1), volume);
  // Guard against rounding in the division either way.
  while (b > 1.0 && !fits(b)) b -= 1.0;
  while (b < volume && fits(b + 1.0)) b += 1.0;
  return static_cast<int>(std::max(1.0, b));
}

double batch_saturation(const HardwareProfile& hw, int batch) {
  const double b = static_cast<double>(batch);
  return b / (b + hw.batch_half_saturation);
}

double effective_throughput(const ClientProfile& profile, const HardwareProfile& hw, int batch) {
  const double rate = profile.compute_avail_frac * profile.compute_gops * 1e9 / kOpsPerParam;
  return rate * batch_saturation(hw, batch);
}

double strategy_factor(const HardwareProfile& hw, QuantStrategy strategy, int batch) {
  if (strategy == QuantStrategy::PTQ) return 1.0;
  return 1.0 + hw.qat_overhead_peak * (1.0 - batch_saturation(hw, batch));
}

double step_time(std::int64_t volume, int batch, int epochs, std::int64_t params, double throughput,
                 double factor) {
  const auto steps = (volume + batch - 1) / batch;
  return static_cast<double>(steps) * epochs * (static_cast<double>(params) / throughput) * factor;
}

double training_time(const ClientProfile& profile, const HardwareProfile& hw, const ModelSpec& model,
                     std::optional<QuantStrategy> strategy) {
  const int batch = select_batch_size(profile, hw, model);
  const double factor = strategy ? strategy_factor(hw, *strategy, batch) : 1.0;
  return step_time(profile.data_volume, batch, profile.epochs_per_round, model.param_count(),
                   effective_throughput(profile, hw, batch), factor);
}

std::map<std::string, double> speed_significance(const std::map<std::string, double>& times) {
  if (times.size() < 2) throw NeedTwoClients("speed significance needs at least two clients");
  double lo = times.begin()->second;
  double hi = lo;
  for (const auto& [id, t] : times) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  std::map<std::string, double> out;
  for (const auto& [id, t] : times) out[id] = hi == lo ? 1.0 : t / (hi - lo);
  return out;
}

std::vector<SpeedReport> profile_clients(const std::vector<ClientHardware>& clients,
                                         const ModelSpec& model) {
  std::vector<SpeedReport> reports;
  std::map<std::string, double> times;
  for (const auto& c : clients) {
    SpeedReport r;
    r.client_id = c.profile.id;
    r.chosen_batch = select_batch_size(c.profile, c.hardware, model);
    r.est_time_s = training_time(c.profile, c.hardware, model);
    times[r.client_id] = r.est_time_s;
    reports.push_back(std::move(r));
  }
  const auto sig = speed_significance(times);
  for (auto& r : reports) r.sig_speed = sig.at(r.client_id);
  std::sort(reports.begin(), reports.end(),
            [](const SpeedReport& a, const SpeedReport& b) { return a.client_id < b.client_id; });
  return reports;
}

}  // namespace hqfl::speed
