// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "hqfl/distfit.hpp"

namespace hqfl::accuracy {

inline constexpr double kDefaultReweightExponent = 0.5;

struct AccuracyReport {
  std::string client_id;
  double sig_acc = 0.0;
  double reweight_exponent = kDefaultReweightExponent;
};

// |x - mean| / scale using the fitted (or fallback) moments.
double distance(double x, const distfit::FitResult& fit);

// V^(-alpha) * sum_v distance(data_v, fit).
double accuracy_significance(std::span<const double> data, const distfit::FitResult& fit,
                             double reweight_exponent = kDefaultReweightExponent);

// Client-side analysis of multi-feature data: each column is fitted on its
// own and the per-column significances are summed. Only the report leaves
// the client.
AccuracyReport analyze_client(const std::string& client_id,
                              const std::vector<std::vector<double>>& columns,
                              double reweight_exponent = kDefaultReweightExponent);

}  // namespace hqfl::accuracy
