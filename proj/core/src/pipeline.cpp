// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hqfl/error.hpp"
#include "hqfl/rng.hpp"
#include "hqfl/serialize.hpp"

namespace hqfl::pipeline {

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<std::string> ordered_modes(const ModeLogs& logs) {
  static const std::vector<std::string> preferred = {"hybrid", "all-ptq", "all-qat", "random"};
  std::vector<std::string> out;
  for (const auto& m : preferred) {
    if (logs.contains(m)) out.push_back(m);
  }
  for (const auto& [m, _] : logs) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

}  // namespace

Analysis analyze(const PipelineConfig& config, const sim::SyntheticDataset& data) {
  Analysis out;
  std::vector<speed::ClientHardware> hw;
  for (const auto& c : config.sim.clients) hw.push_back({c.profile, c.hardware});
  out.speed = speed::profile_clients(hw, config.sim.model);
  for (const auto& id : config.sim.client_ids()) {
    const auto& ds = data.clients.at(id);
    std::vector<std::vector<double>> columns;
    for (std::size_t j = 0; j < ds.dim; ++j) columns.push_back(ds.column(j));
    out.accuracy.push_back(accuracy::analyze_client(id, columns, config.analysis.reweight_exponent));
  }
  return out;
}

Plan plan(const Analysis& analysis, const planner::DispatchConfig& dispatch) {
  std::map<std::string, double> speed;
  std::map<std::string, double> acc;
  for (const auto& r : analysis.speed) speed[r.client_id] = r.sig_speed;
  for (const auto& r : analysis.accuracy) acc[r.client_id] = r.sig_acc;
  const auto prepared = planner::prepare(planner::collect(speed, acc), dispatch);
  Plan p;
  p.audit = planner::audit(prepared, dispatch);
  p.assignment = planner::global_initialize(prepared, dispatch);
  p.flagged = planner::flag_boundary_clients(prepared, dispatch);
  return p;
}

std::vector<std::string> adjustment_flags(const Topology& topology, const std::vector<std::string>& flagged_clients) {
  auto out = adjust::promote_flags(topology, flagged_clients);
  out.insert(out.end(), flagged_clients.begin(), flagged_clients.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

adjust::AdjustResult fine_adjust(const PipelineConfig& config, const sim::SyntheticDataset& data,
                                 const StrategyAssignment& assignment, const std::vector<std::string>& flags) {
  adjust::FewRoundSettings settings;
  settings.rounds = config.analysis.few_rounds;
  settings.data_fraction = config.analysis.subsample_fraction;
  settings.seed = config.sim.global_seed;
  const auto model = adjust::few_round_cost_model(config.sim, data, settings);
  adjust::AdjustOptions options;
  options.lambda = config.sim.lambda;
  options.enumeration_cap = config.analysis.enumeration_cap;
  return adjust::adjust(config.sim.topology(), assignment, flags, model, options);
}

StrategyAssignment random_hybrid(const std::vector<std::string>& client_ids, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "random-hybrid"));
  std::bernoulli_distribution coin(0.5);
  auto ids = client_ids;
  std::sort(ids.begin(), ids.end());
  StrategyAssignment out;
  for (const auto& id : ids) out[id] = {coin(rng) ? QuantStrategy::QAT : QuantStrategy::PTQ, AssignmentSource::InitSlope};
  return out;
}

std::string speed_csv(const std::vector<speed::SpeedReport>& reports) {
  std::ostringstream os;
  os << "client_id,chosen_batch,est_time_s,sig_speed\n";
  for (const auto& r : reports) {
    os << r.client_id << "," << r.chosen_batch << "," << num(r.est_time_s) << "," << num(r.sig_speed) << "\n";
  }
  return os.str();
}

std::string audit_csv(const std::vector<planner::AuditRow>& rows) {
  std::ostringstream os;
  os << "client_id,raw_speed,raw_acc,norm_speed,norm_acc,axis_speed,axis_acc,slope_ratio,area,strategy,source\n";
  for (const auto& r : rows) {
    const auto& p = r.pair;
    os << p.client_id << "," << num(p.raw_speed) << "," << num(p.raw_acc) << "," << num(p.norm_speed) << ","
       << num(p.norm_acc) << "," << num(p.axis_speed) << "," << num(p.axis_acc) << "," << num(r.decision.slope_ratio)
       << "," << num(r.decision.area) << "," << to_string(r.decision.strategy) << ","
       << to_string(r.decision.source) << "\n";
  }
  return os.str();
}

std::string candidates_csv(const adjust::AdjustResult& result) {
  std::ostringstream os;
  os << "root_id,index,candidate,ptq_count,mean_eval_accuracy,simulated_round_time_s,utility,chosen\n";
  for (const auto& sub : result.subtrees) {
    for (std::size_t i = 0; i < sub.scored.size(); ++i) {
      const auto& s = sub.scored[i];
      os << sub.root_id << "," << i << ",\"" << s.candidate.to_string() << "\"," << s.candidate.ptq_count() << ","
         << num(s.mean_eval_accuracy) << "," << num(s.simulated_round_time_s) << "," << num(s.utility) << ","
         << (i == sub.chosen ? 1 : 0) << "\n";
    }
  }
  return os.str();
}

std::string fit_json(const distfit::FitResult& fit) {
  nlohmann::json j = fit;
  return j.dump(2) + "\n";
}

std::string per_epoch_csv(const ModeLogs& logs, const sim::SimConfig& config) {
  std::ostringstream os;
  os << "mode,round,client_id,epochs,epoch_time_s\n";
  for (const auto& mode : ordered_modes(logs)) {
    for (const auto& rec : logs.at(mode)) {
      for (const auto& [id, st] : rec.clients) {
        const int epochs = config.client(id).profile.epochs_per_round;
        os << mode << "," << rec.round << "," << id << "," << epochs << "," << num(st.train_time_s / epochs) << "\n";
      }
    }
  }
  return os.str();
}

std::string per_round_csv(const ModeLogs& logs) {
  std::ostringstream os;
  os << "mode,round,wall_clock_s,accuracy,loss,bytes_up,bytes_down\n";
  for (const auto& mode : ordered_modes(logs)) {
    for (const auto& rec : logs.at(mode)) {
      std::int64_t up = 0;
      std::int64_t down = 0;
      for (const auto& [id, st] : rec.clients) {
        up += st.bytes_up;
        down += st.bytes_down;
      }
      os << mode << "," << rec.round << "," << num(rec.wall_clock_s) << "," << num(rec.accuracy) << ","
         << num(rec.loss) << "," << up << "," << down << "\n";
    }
  }
  return os.str();
}

std::string end_to_end_csv(const ModeLogs& logs) {
  std::ostringstream os;
  os << "mode,rounds,total_wall_clock_s,final_accuracy,final_loss,total_bytes_up,total_bytes_down\n";
  for (const auto& mode : ordered_modes(logs)) {
    const auto& recs = logs.at(mode);
    double clock = 0.0;
    std::int64_t up = 0;
    std::int64_t down = 0;
    for (const auto& rec : recs) {
      clock += rec.wall_clock_s;
      for (const auto& [id, st] : rec.clients) {
        up += st.bytes_up;
        down += st.bytes_down;
      }
    }
    const double acc = recs.empty() ? 0.0 : recs.back().accuracy;
    const double loss = recs.empty() ? 0.0 : recs.back().loss;
    os << mode << "," << recs.size() << "," << num(clock) << "," << num(acc) << "," << num(loss) << "," << up << ","
       << down << "\n";
  }
  return os.str();
}

std::string events_jsonl(const std::vector<sim::RoundRecord>& rounds) {
  std::string out;
  for (const auto& r : rounds) out += sim::to_jsonl(r) + "\n";
  return out;
}

std::vector<sim::RoundRecord> read_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read event log '" + path.string() + "'");
  std::vector<sim::RoundRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(sim::parse_jsonl_line(line));
  }
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  const auto data = sim::generate_data(config.sim);
  PipelineResult result;
  result.analysis = analyze(config, data);
  result.plan = plan(result.analysis, config.dispatch);
  result.assignment = result.plan.assignment;

  if (config.run.fine) {
    const auto flags = adjustment_flags(config.sim.topology(), result.plan.flagged);
    result.adjustment = fine_adjust(config, data, result.assignment, flags);
    result.assignment = result.adjustment->assignment;
  }

  const auto ids = config.sim.client_ids();
  result.logs["hybrid"] = sim::run(config.sim, data, result.assignment).rounds;
  if (config.run.baselines) {
    result.logs["all-ptq"] =
        sim::run(config.sim, data, uniform_assignment(ids, QuantStrategy::PTQ, AssignmentSource::InitSlope)).rounds;
    result.logs["all-qat"] =
        sim::run(config.sim, data, uniform_assignment(ids, QuantStrategy::QAT, AssignmentSource::InitSlope)).rounds;
    result.logs["random"] = sim::run(config.sim, data, random_hybrid(ids, config.sim.global_seed)).rounds;
  }
  return result;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

PipelineResult run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  write_text(out_dir / "manifest.toml", to_toml(config));

  auto result = run_pipeline(config);
  write_text(out_dir / "speed_report.csv", speed_csv(result.analysis.speed));
  write_text(out_dir / "boundary_audit.csv", audit_csv(result.plan.audit));
  if (result.adjustment) write_text(out_dir / "candidate_scores.csv", candidates_csv(*result.adjustment));
  write_text(out_dir / "assignment.json", assignment_to_json(result.assignment).dump(2) + "\n");
  for (const auto& [mode, rounds] : result.logs) write_text(out_dir / ("events_" + mode + ".jsonl"), events_jsonl(rounds));
  write_text(out_dir / "report_per_epoch.csv", per_epoch_csv(result.logs, config.sim));
  write_text(out_dir / "report_per_round.csv", per_round_csv(result.logs));
  write_text(out_dir / "report_end_to_end.csv", end_to_end_csv(result.logs));
  return result;
}

}  // namespace hqfl::pipeline
