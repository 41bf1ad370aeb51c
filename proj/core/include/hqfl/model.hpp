// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared domain values: clients, the model shape, the aggregation tree and
// per-client strategy assignments. Everything here is an immutable value.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hqfl {

enum class QuantStrategy { PTQ, QAT };

std::string_view to_string(QuantStrategy s);
// Accepts exactly "PTQ" or "QAT"; throws InputError otherwise.
QuantStrategy parse_strategy(std::string_view text);

struct ClientProfile {
  std::string id;
  double memory_mb = 0.0;
  double compute_gops = 0.0;
  double mem_avail_frac = 1.0;
  double compute_avail_frac = 1.0;
  std::int64_t data_volume = 0;
  int epochs_per_round = 1;
  // Absent means the batch is derived from the memory budget.
  std::optional<int> batch_size;

  // Throws InputError naming the first violated invariant.
  void validate() const;

  friend bool operator==(const ClientProfile&, const ClientProfile&) = default;
};

// Dense MLP described by its layer widths, input first, output last.
struct ModelSpec {
  std::vector<int> layer_widths;

  void validate() const;
  std::int64_t param_count() const;
  std::int64_t bytes_fp32() const { return 4 * param_count(); }
  std::int64_t bytes_int8() const { return param_count(); }
  // One weight and one bias tensor per dense layer.
  int tensor_count() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

enum class NodeRole { Server, Aggregator, Client };

std::string_view to_string(NodeRole r);
NodeRole parse_role(std::string_view text);

struct TopologyNode {
  std::string id;
  NodeRole role = NodeRole::Client;
  std::vector<TopologyNode> children;

  friend bool operator==(const TopologyNode&, const TopologyNode&) = default;
};

struct TopologyViolation {
  std::string node_id;
  std::string message;

  friend bool operator==(const TopologyViolation&, const TopologyViolation&) = default;
};

class Topology {
 public:
  Topology() = default;
  explicit Topology(TopologyNode root) : root_(std::move(root)) {}

  // Server with every client as a direct child.
  static Topology flat(const std::vector<std::string>& client_ids,
                       std::string server_id = "server");

  const TopologyNode& root() const { return root_; }

  const TopologyNode* find(std::string_view id) const;
  // Root is layer 1. Returns 0 when the id is absent.
  int layer_of(std::string_view id) const;
  // Empty optional for the root or unknown ids.
  std::optional<std::string> parent_of(std::string_view id) const;
  // Node ids from the root down to (and including) `id`.
  std::vector<std::string> path_to(std::string_view id) const;
  // Client ids in ascending order.
  std::vector<std::string> client_ids() const;
  // Client ids in the subtree rooted at `id`, ascending.
  std::vector<std::string> clients_under(std::string_view id) const;
  int depth() const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  TopologyNode root_{"server", NodeRole::Server, {}};
};

// Empty iff the tree is well formed.
std::vector<TopologyViolation> validate_topology(const Topology& topology);

enum class AssignmentSource { InitSlope, InitArea, Adjusted };

std::string_view to_string(AssignmentSource s);
AssignmentSource parse_source(std::string_view text);

struct AssignmentEntry {
  QuantStrategy strategy = QuantStrategy::PTQ;
  AssignmentSource source = AssignmentSource::InitSlope;

  friend bool operator==(const AssignmentEntry&, const AssignmentEntry&) = default;
};

// Keyed by client id; std::map keeps iteration in ascending id order.
using StrategyAssignment = std::map<std::string, AssignmentEntry>;

// Every client of the topology has exactly one entry and there are no extras.
std::vector<std::string> assignment_gaps(const StrategyAssignment& assignment,
                                         const Topology& topology);

StrategyAssignment uniform_assignment(const std::vector<std::string>& client_ids,
                                      QuantStrategy strategy,
                                      AssignmentSource source);

}  // namespace hqfl
