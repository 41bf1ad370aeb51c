// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end workflow: profile and analyze clients, dispatch, optionally
// adjust, then simulate the chosen assignment (and the baselines). Also the
// CSV renderers shared by the CLI subcommands.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hqfl/accuracy_model.hpp"
#include "hqfl/adjuster.hpp"
#include "hqfl/config.hpp"
#include "hqfl/fl_sim.hpp"
#include "hqfl/planner.hpp"
#include "hqfl/speed_model.hpp"

namespace hqfl::pipeline {

struct Analysis {
  std::vector<speed::SpeedReport> speed;
  std::vector<accuracy::AccuracyReport> accuracy;
};

// Speed reports from the hardware profiles and accuracy reports from each
// client's own feature columns.
Analysis analyze(const PipelineConfig& config, const sim::SyntheticDataset& data);

struct Plan {
  std::vector<planner::AuditRow> audit;
  StrategyAssignment assignment;
  std::vector<std::string> flagged;
};

Plan plan(const Analysis& analysis, const planner::DispatchConfig& dispatch);

// Boundary clients plus any aggregator whose clients are mostly flagged.
std::vector<std::string> adjustment_flags(const Topology& topology, const std::vector<std::string>& flagged_clients);

adjust::AdjustResult fine_adjust(const PipelineConfig& config, const sim::SyntheticDataset& data,
                                 const StrategyAssignment& assignment, const std::vector<std::string>& flags);

// Each client independently PTQ or QAT with probability 1/2.
StrategyAssignment random_hybrid(const std::vector<std::string>& client_ids, std::uint64_t seed);

std::string speed_csv(const std::vector<speed::SpeedReport>& reports);
std::string audit_csv(const std::vector<planner::AuditRow>& rows);
std::string candidates_csv(const adjust::AdjustResult& result);
std::string fit_json(const distfit::FitResult& fit);

// Table-3 style summaries keyed by dispatch mode name.
using ModeLogs = std::map<std::string, std::vector<sim::RoundRecord>>;
std::string per_epoch_csv(const ModeLogs& logs, const sim::SimConfig& config);
std::string per_round_csv(const ModeLogs& logs);
std::string end_to_end_csv(const ModeLogs& logs);

std::string events_jsonl(const std::vector<sim::RoundRecord>& rounds);
std::vector<sim::RoundRecord> read_events(const std::filesystem::path& path);

struct PipelineResult {
  Analysis analysis;
  Plan plan;
  std::optional<adjust::AdjustResult> adjustment;
  StrategyAssignment assignment;
  ModeLogs logs;
};

// Runs the workflow without touching the filesystem.
PipelineResult run_pipeline(const PipelineConfig& config);

// Runs the workflow and writes manifest.toml, assignment.json, the audit CSVs
// and events_<mode>.jsonl into `out_dir`.
PipelineResult run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hqfl::pipeline
