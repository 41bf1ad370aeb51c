// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// TOML run configuration. Sections: [model], [dispatch], [analysis],
// [simulation], [hardware] (defaults for every client), [[aggregators]],
// [[clients]] with optional [clients.hardware] and [clients.data], and [run].
// Unknown keys are rejected so that typos surface as input errors.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "hqfl/adjuster.hpp"
#include "hqfl/fl_sim.hpp"
#include "hqfl/planner.hpp"

namespace hqfl {

struct AnalysisConfig {
  double reweight_exponent = 0.5;
  std::size_t enumeration_cap = adjust::kDefaultEnumerationCap;
  int few_rounds = 3;
  double subsample_fraction = 0.1;

  friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

struct RunFlags {
  bool fine = false;
  bool baselines = false;

  friend bool operator==(const RunFlags&, const RunFlags&) = default;
};

struct PipelineConfig {
  sim::SimConfig sim;
  planner::DispatchConfig dispatch;
  AnalysisConfig analysis;
  RunFlags run;

  void validate() const;
};

bool operator==(const PipelineConfig& a, const PipelineConfig& b);

// Throws InputError with the source name and position on malformed input.
PipelineConfig parse_config(std::string_view text, std::string_view source_name = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);

// Canonical TOML form; parse_config(to_toml(c)) == c.
std::string to_toml(const PipelineConfig& config);

}  // namespace hqfl
