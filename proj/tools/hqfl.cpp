// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// hqfl: fit -> profile -> plan -> adjust -> simulate -> report, or all of it
// at once with `pipeline`.
//
// Exit codes: 0 success, 2 input error, 3 domain error, 4 internal error.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hqfl/config.hpp"
#include "hqfl/distfit.hpp"
#include "hqfl/error.hpp"
#include "hqfl/pipeline.hpp"
#include "hqfl/serialize.hpp"

namespace fs = std::filesystem;
using namespace hqfl;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> xi;
  std::optional<double> area_threshold;
  std::optional<double> margin;
  std::optional<double> lambda;
  std::optional<int> rounds;
  bool fine = false;
  bool baselines = false;
};

void add_config_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "TOML run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "global seed (default 42)");
  cmd->add_option("--xi", o.xi, "dispatch xi in (0, 1)");
  cmd->add_option("--area-threshold", o.area_threshold, "triangle area below which a client is PTQ");
  cmd->add_option("--margin", o.margin, "relative boundary margin for flagging");
  cmd->add_option("--lambda", o.lambda, "time weight of the adjustment utility");
  cmd->add_option("--rounds", o.rounds, "simulated rounds");
}

PipelineConfig resolve(const Overrides& o) {
  auto cfg = load_config(o.config);
  if (o.seed) {
    if (*o.seed > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
      throw InputError("--seed must fit in a signed 64-bit integer");
    cfg.sim.global_seed = *o.seed;
  }
  if (o.xi) cfg.dispatch.xi = *o.xi;
  if (o.area_threshold) cfg.dispatch.area_threshold = *o.area_threshold;
  if (o.margin) cfg.dispatch.boundary_margin = *o.margin;
  if (o.lambda) cfg.sim.lambda = *o.lambda;
  if (o.rounds) cfg.sim.rounds = *o.rounds;
  cfg.run.fine = cfg.run.fine || o.fine;
  cfg.run.baselines = cfg.run.baselines || o.baselines;
  cfg.validate();
  return cfg;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// One numeric column; a non-numeric first line is taken as a header.
std::vector<double> read_column(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    std::string_view cell(line.data() + first, last - first + 1);
    if (cell.find(',') != std::string_view::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected a single column");
    }
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      if (values.empty() && line_no == 1) continue;
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": '" + std::string(cell) +
                       "' is not a number");
    }
    values.push_back(v);
  }
  if (values.empty()) throw InputError(path.string() + ": no numeric values");
  if (values.size() < distfit::kMinSamples) {
    throw InputError(path.string() + ": " + std::to_string(values.size()) + " values, at least " +
                     std::to_string(distfit::kMinSamples) + " are required");
  }
  return values;
}

void emit(const std::string& out_dir, const std::string& name, const std::string& text) {
  if (out_dir.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(out_dir);
  pipeline::write_text(fs::path(out_dir) / name, text);
}

std::vector<std::string> read_flags(const fs::path& path) {
  return parse_json_as<std::vector<std::string>>(read_file(path));
}

int run_main(int argc, char** argv) {
  CLI::App app{"hybrid PTQ/QAT planner and quantized federated learning simulator", "hqfl"};
  app.require_subcommand(1);

  std::string csv_path;
  std::string fit_out;
  auto* fit = app.add_subcommand("fit", "fit the nine candidate distributions to one CSV column");
  fit->add_option("csv", csv_path, "CSV file with one numeric column")->required();
  fit->add_option("--out", fit_out, "output directory (fit.json); stdout when absent");

  Overrides po;
  auto* profile = app.add_subcommand("profile", "speed report for every client");
  add_config_options(profile, po);
  profile->add_option("--out", po.out, "output directory (speed_report.csv); stdout when absent");

  Overrides pl;
  pl.out = "out";
  auto* plan = app.add_subcommand("plan", "coarse-grained dispatch");
  add_config_options(plan, pl);
  plan->add_option("--out", pl.out, "output directory")->capture_default_str();

  Overrides ad;
  ad.out = "out";
  std::string ad_assignment;
  std::string ad_flags;
  auto* adjust_cmd = app.add_subcommand("adjust", "fine-grained adjustment of flagged clients");
  add_config_options(adjust_cmd, ad);
  adjust_cmd->add_option("--out", ad.out, "output directory")->capture_default_str();
  adjust_cmd->add_option("--assignment", ad_assignment, "assignment JSON (planned when absent)")
      ->check(CLI::ExistingFile);
  adjust_cmd->add_option("--flags", ad_flags, "JSON array of flagged client or aggregator ids")
      ->check(CLI::ExistingFile);

  Overrides si;
  si.out = "out";
  std::string si_assignment;
  std::string si_mode = "hybrid";
  auto* simulate = app.add_subcommand("simulate", "run the federated simulation for one assignment");
  add_config_options(simulate, si);
  simulate->add_option("--out", si.out, "output directory")->capture_default_str();
  simulate->add_option("--assignment", si_assignment, "assignment JSON (planned when absent)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--mode", si_mode, "mode name used for events_<mode>.jsonl")->capture_default_str();

  Overrides re;
  re.out = "out";
  auto* report = app.add_subcommand("report", "per-epoch, per-round and end-to-end CSV summaries");
  add_config_options(report, re);
  report->add_option("--out", re.out, "directory holding events_<mode>.jsonl")->capture_default_str();

  Overrides pi;
  pi.out = "out";
  auto* pipe = app.add_subcommand("pipeline", "profile, plan, adjust and simulate in one go");
  add_config_options(pipe, pi);
  pipe->add_option("--out", pi.out, "output directory")->capture_default_str();
  pipe->add_flag("--fine", pi.fine, "run the fine-grained adjustment");
  pipe->add_flag("--baselines", pi.baselines, "also simulate all-PTQ, all-QAT and random hybrid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*fit) {
    const auto values = read_column(csv_path);
    emit(fit_out, "fit.json", pipeline::fit_json(distfit::auto_fit(values)));
    return 0;
  }

  if (*profile) {
    const auto cfg = resolve(po);
    std::vector<speed::ClientHardware> hw;
    for (const auto& c : cfg.sim.clients) hw.push_back({c.profile, c.hardware});
    emit(po.out, "speed_report.csv", pipeline::speed_csv(speed::profile_clients(hw, cfg.sim.model)));
    return 0;
  }

  if (*plan) {
    const auto cfg = resolve(pl);
    const auto data = sim::generate_data(cfg.sim);
    const auto p = pipeline::plan(pipeline::analyze(cfg, data), cfg.dispatch);
    emit(pl.out, "manifest.toml", to_toml(cfg));
    emit(pl.out, "assignment.json", assignment_to_json(p.assignment).dump(2) + "\n");
    emit(pl.out, "boundary_audit.csv", pipeline::audit_csv(p.audit));
    emit(pl.out, "flags.json",
         nlohmann::json(pipeline::adjustment_flags(cfg.sim.topology(), p.flagged)).dump(2) + "\n");
    return 0;
  }

  if (*adjust_cmd) {
    const auto cfg = resolve(ad);
    const auto data = sim::generate_data(cfg.sim);
    StrategyAssignment base;
    std::vector<std::string> flags;
    if (ad_assignment.empty() || ad_flags.empty()) {
      const auto p = pipeline::plan(pipeline::analyze(cfg, data), cfg.dispatch);
      base = p.assignment;
      flags = pipeline::adjustment_flags(cfg.sim.topology(), p.flagged);
    }
    if (!ad_assignment.empty()) base = assignment_from_json(parse_json_as<nlohmann::json>(read_file(ad_assignment)));
    if (!ad_flags.empty()) flags = read_flags(ad_flags);
    if (const auto gaps = assignment_gaps(base, cfg.sim.topology()); !gaps.empty()) {
      throw InputError("assignment does not match the configured clients; first mismatch: '" + gaps.front() + "'");
    }
    const auto result = pipeline::fine_adjust(cfg, data, base, flags);
    emit(ad.out, "assignment.json", assignment_to_json(result.assignment).dump(2) + "\n");
    emit(ad.out, "candidate_scores.csv", pipeline::candidates_csv(result));
    return 0;
  }

  if (*simulate) {
    const auto cfg = resolve(si);
    const auto data = sim::generate_data(cfg.sim);
    StrategyAssignment assignment;
    if (si_assignment.empty()) {
      assignment = pipeline::plan(pipeline::analyze(cfg, data), cfg.dispatch).assignment;
    } else {
      assignment = assignment_from_json(parse_json_as<nlohmann::json>(read_file(si_assignment)));
    }
    const auto result = sim::run(cfg.sim, data, assignment);
    emit(si.out, "events_" + si_mode + ".jsonl", pipeline::events_jsonl(result.rounds));
    return 0;
  }

  if (*report) {
    const auto cfg = resolve(re);
    pipeline::ModeLogs logs;
    if (!fs::is_directory(re.out)) throw InputError("'" + re.out + "' is not a directory");
    for (const auto& entry : fs::directory_iterator(re.out)) {
      const auto name = entry.path().filename().string();
      if (name.starts_with("events_") && name.ends_with(".jsonl")) {
        logs[name.substr(7, name.size() - 7 - 6)] = pipeline::read_events(entry.path());
      }
    }
    if (logs.empty()) throw InputError("no events_<mode>.jsonl files in '" + re.out + "'");
    emit(re.out, "report_per_epoch.csv", pipeline::per_epoch_csv(logs, cfg.sim));
    emit(re.out, "report_per_round.csv", pipeline::per_round_csv(logs));
    emit(re.out, "report_end_to_end.csv", pipeline::end_to_end_csv(logs));
    return 0;
  }

  if (*pipe) {
    const auto cfg = resolve(pi);
    const auto result = pipeline::run_pipeline(cfg, pi.out);
    std::cout << pipeline::end_to_end_csv(result.logs);
    return 0;
  }
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
