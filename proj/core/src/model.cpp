// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "hqfl/error.hpp"

namespace hqfl {

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

bool find_path(const TopologyNode& node, std::string_view id,
               std::vector<std::string>& path) {
  path.push_back(node.id);
  if (node.id == id) return true;
  for (const auto& child : node.children) {
    if (find_path(child, id, path)) return true;
  }
  path.pop_back();
  return false;
}

void collect_clients(const TopologyNode& node, std::vector<std::string>& out) {
  if (node.role == NodeRole::Client) out.push_back(node.id);
  for (const auto& child : node.children) collect_clients(child, out);
}

const TopologyNode* find_node(const TopologyNode& node, std::string_view id) {
  if (node.id == id) return &node;
  for (const auto& child : node.children) {
    if (const auto* hit = find_node(child, id)) return hit;
  }
  return nullptr;
}

}  // namespace

KeyMismatch::KeyMismatch(std::vector<std::string> ids)
    : InputError("client id sets differ: " + join_ids(ids)), ids_(std::move(ids)) {}

std::string_view to_string(QuantStrategy s) {
  return s == QuantStrategy::PTQ ? "PTQ" : "QAT";
}

QuantStrategy parse_strategy(std::string_view text) {
  if (text == "PTQ") return QuantStrategy::PTQ;
  if (text == "QAT") return QuantStrategy::QAT;
  throw InputError("unknown quantization strategy '" + std::string(text) + "'");
}

void ClientProfile::validate() const {
  auto fail = [this](const std::string& what) {
    throw InputError("client '" + id + "': " + what);
  };
  if (id.empty()) throw InputError("client id must be non-empty");
  if (!(memory_mb > 0.0) || !std::isfinite(memory_mb)) fail("memory_mb must be > 0");
  if (!(compute_gops > 0.0) || !std::isfinite(compute_gops)) fail("compute_gops must be > 0");
  if (!(mem_avail_frac > 0.0 && mem_avail_frac <= 1.0)) fail("mem_avail_frac must lie in (0, 1]");
  if (!(compute_avail_frac > 0.0 && compute_avail_frac <= 1.0))
    fail("compute_avail_frac must lie in (0, 1]");
  if (data_volume < 1) fail("data_volume must be >= 1");
  if (epochs_per_round < 1) fail("epochs_per_round must be >= 1");
  if (batch_size && *batch_size < 1) fail("batch_size must be >= 1 when present");
}

void ModelSpec::validate() const {
  if (layer_widths.size() < 2) throw InputError("layer_widths needs at least input and output widths");
  for (int w : layer_widths) {
    if (w < 1) throw InputError("layer widths must be positive");
  }
}

std::int64_t ModelSpec::param_count() const {
  std::int64_t total = 0;
  for (std::size_t i = 0; i + 1 < layer_widths.size(); ++i) {
    const auto in = static_cast<std::int64_t>(layer_widths[i]);
    const auto out = static_cast<std::int64_t>(layer_widths[i + 1]);
    total += in * out + out;
  }
  return total;
}

int ModelSpec::tensor_count() const {
  return layer_widths.size() < 2 ? 0 : 2 * static_cast<int>(layer_widths.size() - 1);
}

std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Server: return "server";
    case NodeRole::Aggregator: return "aggregator";
    case NodeRole::Client: return "client";
  }
  return "client";
}

NodeRole parse_role(std::string_view text) {
  if (text == "server") return NodeRole::Server;
  if (text == "aggregator") return NodeRole::Aggregator;
  if (text == "client") return NodeRole::Client;
  throw InputError("unknown node role '" + std::string(text) + "'");
}

Topology Topology::flat(const std::vector<std::string>& client_ids, std::string server_id) {
  TopologyNode root{std::move(server_id), NodeRole::Server, {}};
  for (const auto& id : client_ids) root.children.push_back({id, NodeRole::Client, {}});
  return Topology(std::move(root));
}

const TopologyNode* Topology::find(std::string_view id) const { return find_node(root_, id); }

int Topology::layer_of(std::string_view id) const {
  std::vector<std::string> path;
  return find_path(root_, id, path) ? static_cast<int>(path.size()) : 0;
}

std::optional<std::string> Topology::parent_of(std::string_view id) const {
  std::vector<std::string> path;
  if (!find_path(root_, id, path) || path.size() < 2) return std::nullopt;
  return path[path.size() - 2];
}

std::vector<std::string> Topology::path_to(std::string_view id) const {
  std::vector<std::string> path;
  if (!find_path(root_, id, path)) path.clear();
  return path;
}

std::vector<std::string> Topology::client_ids() const { return clients_under(root_.id); }

std::vector<std::string> Topology::clients_under(std::string_view id) const {
  std::vector<std::string> out;
  if (const auto* node = find(id)) collect_clients(*node, out);
  std::sort(out.begin(), out.end());
  return out;
}

int Topology::depth() const {
  std::function<int(const TopologyNode&)> walk = [&](const TopologyNode& n) {
    int best = 0;
    for (const auto& c : n.children) best = std::max(best, walk(c));
    return best + 1;
  };
  return walk(root_);
}

std::vector<TopologyViolation> validate_topology(const Topology& topology) {
  std::vector<TopologyViolation> out;
  std::set<std::string> seen;
  const auto& root = topology.root();
  if (root.role != NodeRole::Server) out.push_back({root.id, "root must have role server"});
  if (root.children.empty()) out.push_back({root.id, "server has no children"});

  std::function<void(const TopologyNode&, bool)> walk = [&](const TopologyNode& node, bool is_root) {
    if (!seen.insert(node.id).second) out.push_back({node.id, "duplicate node id"});
    if (!is_root && node.role == NodeRole::Server)
      out.push_back({node.id, "only the root may have role server"});
    if (node.children.empty() && node.role == NodeRole::Aggregator)
      out.push_back({node.id, "leaf node must be a client, found aggregator"});
    if (!node.children.empty() && node.role == NodeRole::Client)
      out.push_back({node.id, "client node must be a leaf"});
    for (const auto& child : node.children) walk(child, false);
  };
  walk(root, true);
  return out;
}

std::string_view to_string(AssignmentSource s) {
  switch (s) {
    case AssignmentSource::InitSlope: return "init-slope";
    case AssignmentSource::InitArea: return "init-area";
    case AssignmentSource::Adjusted: return "adjusted";
  }
  return "init-slope";
}

AssignmentSource parse_source(std::string_view text) {
  if (text == "init-slope") return AssignmentSource::InitSlope;
  if (text == "init-area") return AssignmentSource::InitArea;
  if (text == "adjusted") return AssignmentSource::Adjusted;
  throw InputError("unknown assignment source '" + std::string(text) + "'");
}

std::vector<std::string> assignment_gaps(const StrategyAssignment& assignment,
                                         const Topology& topology) {
  std::vector<std::string> gaps;
  const auto clients = topology.client_ids();
  for (const auto& id : clients) {
    if (!assignment.contains(id)) gaps.push_back(id);
  }
  for (const auto& [id, entry] : assignment) {
    if (!std::binary_search(clients.begin(), clients.end(), id)) gaps.push_back(id);
  }
  std::sort(gaps.begin(), gaps.end());
  return gaps;
}

StrategyAssignment uniform_assignment(const std::vector<std::string>& client_ids,
                                      QuantStrategy strategy, AssignmentSource source) {
  StrategyAssignment out;
  for (const auto& id : client_ids) out[id] = {strategy, source};
  return out;
}

}  // namespace hqfl
