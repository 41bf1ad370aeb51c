// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Server-side coarse dispatch. Raw significances are min-max normalised into
// the open unit interval, flipped so that larger means "faster" and "more
// accurate", and every client is then placed by two rules:
//
//   area  : 0.5 * axis_speed * axis_acc < area_threshold         -> PTQ
//   slope : axis_acc / axis_speed > xi / (1 - xi)                 -> PTQ
//           otherwise                                             -> QAT

#pragma once

#include <map>
#include <string>
#include <vector>

#include "hqfl/model.hpp"

namespace hqfl::planner {

struct SignificancePair {
  std::string client_id;
  double raw_speed = 0.0;
  double raw_acc = 0.0;
  double norm_speed = 0.0;
  double norm_acc = 0.0;
  double axis_speed = 0.0;
  double axis_acc = 0.0;
};

struct DispatchConfig {
  double xi = 0.2;
  double area_threshold = 0.0625;
  double boundary_margin = 0.1;
  double epsilon = 1e-3;

  void validate() const;
  // Magnitude of the Theta isoline slope.
  double slope_threshold() const { return xi / (1.0 - xi); }
};

struct Decision {
  QuantStrategy strategy = QuantStrategy::PTQ;
  AssignmentSource source = AssignmentSource::InitSlope;
  double slope_ratio = 0.0;
  double area = 0.0;
};

std::vector<SignificancePair> collect(const std::map<std::string, double>& speed,
                                      const std::map<std::string, double>& acc);

// (x - min + eps) / (max - min + 2 eps); all 0.5 when max == min.
std::vector<double> normalize(const std::vector<double>& values, double epsilon = 1e-3);

SignificancePair orient_axes(SignificancePair pair);

Decision dispatch_one(const SignificancePair& pair, const DispatchConfig& config);

// Fills norm and axis fields of every pair.
std::vector<SignificancePair> prepare(std::vector<SignificancePair> pairs, const DispatchConfig& config);

StrategyAssignment global_initialize(const std::vector<SignificancePair>& pairs,
                                     const DispatchConfig& config);

// Slope-ruled clients within boundary_margin (relative) of the Theta slope.
// Expects prepared pairs.
std::vector<std::string> flag_boundary_clients(const std::vector<SignificancePair>& pairs,
                                               const DispatchConfig& config);

struct AuditRow {
  SignificancePair pair;
  Decision decision;
};

std::vector<AuditRow> audit(const std::vector<SignificancePair>& prepared, const DispatchConfig& config);

}  // namespace hqfl::planner
