// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/serialize.hpp"

namespace hqfl {

using nlohmann::json;

void to_json(json& j, const QuantStrategy& s) { j = std::string(to_string(s)); }
void from_json(const json& j, QuantStrategy& s) { s = parse_strategy(j.get<std::string>()); }

void to_json(json& j, const ClientProfile& p) {
  j = json{{"id", p.id},
           {"memory_mb", p.memory_mb},
           {"compute_gops", p.compute_gops},
           {"mem_avail_frac", p.mem_avail_frac},
           {"compute_avail_frac", p.compute_avail_frac},
           {"data_volume", p.data_volume},
           {"epochs_per_round", p.epochs_per_round}};
  if (p.batch_size) j["batch_size"] = *p.batch_size;
}

void from_json(const json& j, ClientProfile& p) {
  p.id = j.at("id").get<std::string>();
  p.memory_mb = j.at("memory_mb").get<double>();
  p.compute_gops = j.at("compute_gops").get<double>();
  p.mem_avail_frac = j.at("mem_avail_frac").get<double>();
  p.compute_avail_frac = j.at("compute_avail_frac").get<double>();
  p.data_volume = j.at("data_volume").get<std::int64_t>();
  p.epochs_per_round = j.at("epochs_per_round").get<int>();
  p.batch_size.reset();
  if (j.contains("batch_size")) p.batch_size = j.at("batch_size").get<int>();
}

void to_json(json& j, const ModelSpec& m) {
  j = json{{"layer_widths", m.layer_widths}, {"param_count", m.param_count()}};
}

void from_json(const json& j, ModelSpec& m) { m.layer_widths = j.at("layer_widths").get<std::vector<int>>(); }

void to_json(json& j, const TopologyNode& n) {
  j = json{{"id", n.id}, {"role", std::string(to_string(n.role))}, {"children", n.children}};
}

void from_json(const json& j, TopologyNode& n) {
  n.id = j.at("id").get<std::string>();
  n.role = parse_role(j.at("role").get<std::string>());
  n.children = j.value("children", std::vector<TopologyNode>{});
}

void to_json(json& j, const Topology& t) { j = t.root(); }
void from_json(const json& j, Topology& t) { t = Topology(j.get<TopologyNode>()); }

void to_json(json& j, const AssignmentEntry& e) {
  j = json{{"strategy", e.strategy}, {"source", std::string(to_string(e.source))}};
}

void from_json(const json& j, AssignmentEntry& e) {
  e.strategy = j.at("strategy").get<QuantStrategy>();
  e.source = parse_source(j.at("source").get<std::string>());
}

json assignment_to_json(const StrategyAssignment& a) {
  json j = json::object();
  for (const auto& [id, entry] : a) j[id] = entry;
  return j;
}

StrategyAssignment assignment_from_json(const json& j) {
  if (!j.is_object()) throw InputError("assignment must be a JSON object keyed by client id");
  StrategyAssignment a;
  try {
    for (const auto& [id, entry] : j.items()) a[id] = entry.get<AssignmentEntry>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed assignment: ") + e.what());
  }
  return a;
}

namespace distfit {

void to_json(json& j, const Distribution& d) {
  json params = json::object();
  const auto names = param_names(d.family);
  for (std::size_t i = 0; i < names.size() && i < d.params.size(); ++i) params[std::string(names[i])] = d.params[i];
  j = json{{"family", std::string(to_string(d.family))}, {"params", params}};
}

void from_json(const json& j, Distribution& d) {
  d.family = parse_family(j.at("family").get<std::string>());
  d.params.clear();
  for (auto name : param_names(d.family)) d.params.push_back(j.at("params").at(std::string(name)).get<double>());
  d.validate();
}

void to_json(json& j, const FitResult& f) {
  j = json{{"distribution", f.distribution}, {"goodness", f.goodness}};
  j["mean"] = f.mean_defined ? json(f.mean) : json("undefined");
  j["scale"] = f.scale_defined ? json(f.scale) : json("undefined");
  j["fallback_mean"] = f.mean;
  j["fallback_scale"] = f.scale;
}

void from_json(const json& j, FitResult& f) {
  f.distribution = j.at("distribution").get<Distribution>();
  f.goodness = j.at("goodness").get<double>();
  f.mean_defined = !j.at("mean").is_string();
  f.scale_defined = !j.at("scale").is_string();
  f.mean = j.at("fallback_mean").get<double>();
  f.scale = j.at("fallback_scale").get<double>();
}

}  // namespace distfit

namespace speed {

void to_json(json& j, const HardwareProfile& h) {
  j = json{{"batch_mem_intercept_mb", h.batch_mem_intercept_mb},
           {"batch_half_saturation", h.batch_half_saturation},
           {"qat_overhead_peak", h.qat_overhead_peak}};
  if (h.batch_mem_slope_mb) j["batch_mem_slope_mb"] = *h.batch_mem_slope_mb;
}

void from_json(const json& j, HardwareProfile& h) {
  h.batch_mem_intercept_mb = j.at("batch_mem_intercept_mb").get<double>();
  h.batch_half_saturation = j.at("batch_half_saturation").get<double>();
  h.qat_overhead_peak = j.at("qat_overhead_peak").get<double>();
  h.batch_mem_slope_mb.reset();
  if (j.contains("batch_mem_slope_mb")) h.batch_mem_slope_mb = j.at("batch_mem_slope_mb").get<double>();
}

}  // namespace speed

}  // namespace hqfl
