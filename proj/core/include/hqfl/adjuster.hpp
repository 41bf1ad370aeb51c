// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fine-grained re-dispatch of clients near the coarse boundary.
//
// A flagged leaf client that is not inside a flagged aggregator subtree is
// simply flipped (Situation 1). A flagged aggregator takes every client below
// it into a candidate list, all 2^k PTQ/QAT combinations are scored by a cost
// model, and the highest-utility candidate wins (Situation 2). Subtrees are
// handled top-down by layer.

#pragma once

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hqfl/fl_sim.hpp"
#include "hqfl/model.hpp"

namespace hqfl::adjust {

inline constexpr std::size_t kDefaultEnumerationCap = 12;

enum class Situation { Situation1, Situation2 };

// Layer-indexed lists; layers[0] is L1 (the server).
struct CandidateList {
  std::vector<std::vector<std::pair<std::string, QuantStrategy>>> layers;

  std::size_t ptq_count() const;
  // Applies the candidate on top of `base`; touched clients get source adjusted.
  StrategyAssignment apply(const StrategyAssignment& base) const;
  std::string to_string() const;

  friend bool operator==(const CandidateList&, const CandidateList&) = default;
};

struct CostEstimate {
  CandidateList candidate;
  double mean_eval_accuracy = 0.0;
  double simulated_round_time_s = 0.0;
  double utility = 0.0;
};

// utility = accuracy - lambda * time / reference_time
double utility(double accuracy, double round_time, double reference_time, double lambda);

// `flagged` may hold client or aggregator ids.
Situation classify_situation(const Topology& topology, const std::string& node_id,
                             const std::set<std::string>& flagged = {});

// 2^|ids| candidates in binary counting order: bit i (ids ascending) set
// means QAT for ids[i]. Throws TooManyFlagged past `cap`.
std::vector<CandidateList> enumerate_candidates(const Topology& topology, std::vector<std::string> ids,
                                                std::size_t cap = kDefaultEnumerationCap);

struct FewRoundSettings {
  int rounds = 3;
  double data_fraction = 0.1;
  std::uint64_t seed = 42;
};

// Runs the simulator for a few rounds on subsampled data under the candidate.
// Utility is normalised by `reference_time` (own round time when absent).
CostEstimate few_round_eval(const CandidateList& candidate, const StrategyAssignment& base,
                            const sim::SimConfig& config, const sim::SyntheticDataset& data,
                            const FewRoundSettings& settings, std::optional<double> reference_time = std::nullopt);

// Cost model seam: scores a candidate against the current assignment.
// `utility` is filled in afterwards by the caller.
using CostModel = std::function<CostEstimate(const CandidateList&, const StrategyAssignment& base)>;

// `config` and `data` are captured by reference and must outlive the model.
CostModel few_round_cost_model(const sim::SimConfig& config, const sim::SyntheticDataset& data,
                               FewRoundSettings settings);

// Scores all candidates and normalises utilities by the cohort's largest
// round time.
std::vector<CostEstimate> score_candidates(const std::vector<CandidateList>& candidates,
                                           const StrategyAssignment& base, const CostModel& model,
                                           double lambda);

// Index of the best estimate: highest utility, then more PTQ entries, then
// enumeration order.
std::size_t select_best(const std::vector<CostEstimate>& scored);

struct SubtreeDecision {
  std::string root_id;
  std::vector<CostEstimate> scored;
  std::size_t chosen = 0;
};

struct AdjustResult {
  StrategyAssignment assignment;
  std::vector<std::string> flipped;  // Situation 1 clients
  std::vector<SubtreeDecision> subtrees;
  std::size_t evaluations = 0;
};

struct AdjustOptions {
  double lambda = 0.25;
  std::size_t enumeration_cap = kDefaultEnumerationCap;
};

AdjustResult adjust(const Topology& topology, const StrategyAssignment& assignment,
                    std::span<const std::string> flagged, const CostModel& model,
                    const AdjustOptions& options = {});

// Aggregators whose client descendants are more than half flagged; used to
// lift client-level boundary flags to whole subtrees.
std::vector<std::string> promote_flags(const Topology& topology, std::span<const std::string> flagged_clients);

}  // namespace hqfl::adjust
