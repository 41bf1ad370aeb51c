// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/adjuster.hpp"

#include <algorithm>
#include <functional>

#include "hqfl/error.hpp"

namespace hqfl::adjust {

namespace {

bool has_flagged_ancestor(const Topology& topology, const std::string& id, const std::set<std::string>& flagged) {
  const auto path = topology.path_to(id);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (flagged.contains(path[i])) return true;
  }
  return false;
}

void visit(const TopologyNode& node, const std::function<void(const TopologyNode&)>& fn) {
  fn(node);
  for (const auto& c : node.children) visit(c, fn);
}

}  // namespace

std::size_t CandidateList::ptq_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    for (const auto& [id, s] : layer) n += s == QuantStrategy::PTQ ? 1 : 0;
  }
  return n;
}

StrategyAssignment CandidateList::apply(const StrategyAssignment& base) const {
  StrategyAssignment out = base;
  for (const auto& layer : layers) {
    for (const auto& [id, s] : layer) out[id] = {s, AssignmentSource::Adjusted};
  }
  return out;
}

std::string CandidateList::to_string() const {
  std::string out = "[";
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l) out += ",";
    out += "[";
    for (std::size_t i = 0; i < layers[l].size(); ++i) {
      if (i) out += ",";
      out += layers[l][i].first + ":" + std::string(hqfl::to_string(layers[l][i].second));
    }
    out += "]_L" + std::to_string(l + 1);
  }
  return out + "]";
}

double utility(double accuracy, double round_time, double reference_time, double lambda) {
  return accuracy - lambda * (round_time / reference_time);
}

Situation classify_situation(const Topology& topology, const std::string& node_id,
                             const std::set<std::string>& flagged) {
  const auto* node = topology.find(node_id);
  if (!node) throw UnknownClient("unknown node '" + node_id + "'");
  if (node->role != NodeRole::Client) return Situation::Situation2;
  return has_flagged_ancestor(topology, node_id, flagged) ? Situation::Situation2 : Situation::Situation1;
}

std::vector<CandidateList> enumerate_candidates(const Topology& topology, std::vector<std::string> ids,
                                                std::size_t cap) {
  if (ids.empty()) throw InputError("candidate enumeration needs at least one adjustable client");
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw InputError("duplicate adjustable client");
  if (ids.size() > cap) {
    throw TooManyFlagged(std::to_string(ids.size()) + " adjustable clients exceed the enumeration cap of " +
                         std::to_string(cap));
  }
  std::vector<int> layer(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto* node = topology.find(ids[i]);
    if (!node || node->role != NodeRole::Client) throw UnknownClient("unknown client '" + ids[i] + "'");
    layer[i] = topology.layer_of(ids[i]);
  }
  const int depth = topology.depth();
  const std::size_t total = std::size_t{1} << ids.size();
  std::vector<CandidateList> out;
  out.reserve(total);
  for (std::size_t mask = 0; mask < total; ++mask) {
    CandidateList c;
    c.layers.resize(depth);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto s = (mask >> i) & 1U ? QuantStrategy::QAT : QuantStrategy::PTQ;
      c.layers[layer[i] - 1].push_back({ids[i], s});
    }
    out.push_back(std::move(c));
  }
  return out;
}

CostEstimate few_round_eval(const CandidateList& candidate, const StrategyAssignment& base,
                            const sim::SimConfig& config, const sim::SyntheticDataset& data,
                            const FewRoundSettings& settings, std::optional<double> reference_time) {
  if (settings.rounds < 1) throw InputError("few-round evaluation needs at least one round");
  sim::SimConfig cfg = config;
  cfg.global_seed = settings.seed;
  sim::RunOptions opts;
  opts.rounds = settings.rounds;
  opts.data_fraction = settings.data_fraction;
  const auto result = sim::run(cfg, data, candidate.apply(base), opts);

  CostEstimate est;
  est.candidate = candidate;
  for (const auto& r : result.rounds) {
    est.mean_eval_accuracy += r.accuracy;
    est.simulated_round_time_s += r.wall_clock_s;
  }
  const auto n = static_cast<double>(result.rounds.size());
  est.mean_eval_accuracy /= n;
  est.simulated_round_time_s /= n;
  est.utility = utility(est.mean_eval_accuracy, est.simulated_round_time_s,
                        reference_time.value_or(est.simulated_round_time_s), config.lambda);
  return est;
}

CostModel few_round_cost_model(const sim::SimConfig& config, const sim::SyntheticDataset& data,
                               FewRoundSettings settings) {
  return [&config, &data, settings](const CandidateList& c, const StrategyAssignment& base) {
    return few_round_eval(c, base, config, data, settings);
  };
}

std::vector<CostEstimate> score_candidates(const std::vector<CandidateList>& candidates,
                                           const StrategyAssignment& base, const CostModel& model,
                                           double lambda) {
  std::vector<CostEstimate> scored;
  scored.reserve(candidates.size());
  double cohort_max = 0.0;
  for (const auto& c : candidates) {
    scored.push_back(model(c, base));
    cohort_max = std::max(cohort_max, scored.back().simulated_round_time_s);
  }
  for (auto& s : scored) {
    s.utility = cohort_max > 0.0 ? utility(s.mean_eval_accuracy, s.simulated_round_time_s, cohort_max, lambda)
                                 : s.mean_eval_accuracy;
  }
  return scored;
}

std::size_t select_best(const std::vector<CostEstimate>& scored) {
  if (scored.empty()) throw InputError("no candidates to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scored.size(); ++i) {
    const auto& a = scored[i];
    const auto& b = scored[best];
    if (a.utility > b.utility ||
        (a.utility == b.utility && a.candidate.ptq_count() > b.candidate.ptq_count())) {
      best = i;
    }
  }
  return best;
}

AdjustResult adjust(const Topology& topology, const StrategyAssignment& assignment,
                    std::span<const std::string> flagged, const CostModel& model, const AdjustOptions& options) {
  const std::set<std::string> flags(flagged.begin(), flagged.end());
  for (const auto& id : flags) {
    if (!topology.find(id)) throw UnknownClient("flagged id '" + id + "' is not in the topology");
  }

  AdjustResult result;
  result.assignment = assignment;

  std::vector<std::string> roots;
  for (const auto& id : flags) {
    if (topology.find(id)->role == NodeRole::Client) {
      if (classify_situation(topology, id, flags) == Situation::Situation1) {
        auto& entry = result.assignment.at(id);
        entry.strategy = entry.strategy == QuantStrategy::PTQ ? QuantStrategy::QAT : QuantStrategy::PTQ;
        entry.source = AssignmentSource::Adjusted;
        result.flipped.push_back(id);
      }
    } else if (!has_flagged_ancestor(topology, id, flags)) {
      roots.push_back(id);
    }
  }
  std::stable_sort(roots.begin(), roots.end(), [&](const std::string& a, const std::string& b) {
    return topology.layer_of(a) < topology.layer_of(b);
  });

  for (const auto& root : roots) {
    const auto candidates = enumerate_candidates(topology, topology.clients_under(root), options.enumeration_cap);
    SubtreeDecision decision;
    decision.root_id = root;
    decision.scored = score_candidates(candidates, result.assignment, model, options.lambda);
    decision.chosen = select_best(decision.scored);
    result.evaluations += decision.scored.size();
    result.assignment = candidates[decision.chosen].apply(result.assignment);
    result.subtrees.push_back(std::move(decision));
  }
  return result;
}

std::vector<std::string> promote_flags(const Topology& topology, std::span<const std::string> flagged_clients) {
  const std::set<std::string> flags(flagged_clients.begin(), flagged_clients.end());
  std::vector<std::string> out;
  visit(topology.root(), [&](const TopologyNode& node) {
    if (node.role != NodeRole::Aggregator) return;
    const auto clients = topology.clients_under(node.id);
    const auto hit = std::count_if(clients.begin(), clients.end(), [&](const auto& c) { return flags.contains(c); });
    if (2 * static_cast<std::size_t>(hit) > clients.size()) out.push_back(node.id);
  });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hqfl::adjust
