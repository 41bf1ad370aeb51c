// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/planner.hpp"

#include <algorithm>
#include <cmath>

#include "hqfl/error.hpp"

namespace hqfl::planner {

void DispatchConfig::validate() const {
  if (!(xi > 0.0 && xi < 1.0)) throw InputError("xi must lie in (0, 1)");
  if (!(area_threshold >= 0.0)) throw InputError("area_threshold must be >= 0");
  if (!(boundary_margin >= 0.0)) throw InputError("boundary_margin must be >= 0");
  if (!(epsilon > 0.0)) throw InputError("normalisation epsilon must be > 0");
}

std::vector<SignificancePair> collect(const std::map<std::string, double>& speed,
                                      const std::map<std::string, double>& acc) {
  std::vector<std::string> mismatched;
  for (const auto& [id, v] : speed) {
    if (!acc.contains(id)) mismatched.push_back(id);
  }
  for (const auto& [id, v] : acc) {
    if (!speed.contains(id)) mismatched.push_back(id);
  }
  if (!mismatched.empty()) {
    std::sort(mismatched.begin(), mismatched.end());
    throw KeyMismatch(std::move(mismatched));
  }
  std::vector<SignificancePair> out;
  for (const auto& [id, s] : speed) {
    SignificancePair p;
    p.client_id = id;
    p.raw_speed = s;
    p.raw_acc = acc.at(id);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> normalize(const std::vector<double>& values, double epsilon) {
  if (values.size() < 2) throw NeedTwoValues("normalisation needs at least two values");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(values.size(), 0.5);
  if (hi == lo) return out;
  const double span = hi - lo + 2.0 * epsilon;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo + epsilon) / span;
  return out;
}

SignificancePair orient_axes(SignificancePair pair) {
  pair.axis_speed = 1.0 - pair.norm_speed;
  pair.axis_acc = 1.0 - pair.norm_acc;
  return pair;
}

Decision dispatch_one(const SignificancePair& pair, const DispatchConfig& config) {
  Decision d;
  d.area = 0.5 * pair.axis_speed * pair.axis_acc;
  d.slope_ratio = pair.axis_acc / pair.axis_speed;
  if (d.area < config.area_threshold) {
    d.strategy = QuantStrategy::PTQ;
    d.source = AssignmentSource::InitArea;
    return d;
  }
  d.source = AssignmentSource::InitSlope;
  d.strategy = d.slope_ratio > config.slope_threshold() ? QuantStrategy::PTQ : QuantStrategy::QAT;
  return d;
}

std::vector<SignificancePair> prepare(std::vector<SignificancePair> pairs, const DispatchConfig& config) {
  config.validate();
  if (pairs.size() < 2) throw NeedTwoClients("dispatch needs at least two clients");
  std::vector<double> speed;
  std::vector<double> acc;
  for (const auto& p : pairs) {
    speed.push_back(p.raw_speed);
    acc.push_back(p.raw_acc);
  }
  const auto ns = normalize(speed, config.epsilon);
  const auto na = normalize(acc, config.epsilon);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i].norm_speed = ns[i];
    pairs[i].norm_acc = na[i];
    pairs[i] = orient_axes(std::move(pairs[i]));
  }
  return pairs;
}

StrategyAssignment global_initialize(const std::vector<SignificancePair>& pairs,
                                     const DispatchConfig& config) {
  StrategyAssignment out;
  for (const auto& p : prepare(pairs, config)) {
    const auto d = dispatch_one(p, config);
    out[p.client_id] = {d.strategy, d.source};
  }
  return out;
}

std::vector<std::string> flag_boundary_clients(const std::vector<SignificancePair>& pairs,
                                               const DispatchConfig& config) {
  const double theta = config.slope_threshold();
  std::vector<std::string> out;
  for (const auto& p : pairs) {
    const auto d = dispatch_one(p, config);
    if (d.source == AssignmentSource::InitArea) continue;
    if (std::abs(d.slope_ratio - theta) / theta <= config.boundary_margin) out.push_back(p.client_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<AuditRow> audit(const std::vector<SignificancePair>& prepared, const DispatchConfig& config) {
  std::vector<AuditRow> rows;
  for (const auto& p : prepared) rows.push_back({p, dispatch_one(p, config)});
  std::sort(rows.begin(), rows.end(),
            [](const AuditRow& a, const AuditRow& b) { return a.pair.client_id < b.pair.client_id; });
  return rows;
}

}  // namespace hqfl::planner
