// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/accuracy_model.hpp"

#include <cmath>

#include "hqfl/error.hpp"

namespace hqfl::accuracy {

namespace {

void check_exponent(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ExponentOutOfRange("reweight exponent must lie in (0, 1), got " + std::to_string(alpha));
  }
}

}  // namespace

double distance(double x, const distfit::FitResult& fit) { return std::abs(x - fit.mean) / fit.scale; }

double accuracy_significance(std::span<const double> data, const distfit::FitResult& fit,
                             double reweight_exponent) {
  check_exponent(reweight_exponent);
  if (data.empty()) throw InputError("accuracy significance needs at least one data point");
  double total = 0.0;
  for (double x : data) total += distance(x, fit);
  return std::pow(static_cast<double>(data.size()), -reweight_exponent) * total;
}

AccuracyReport analyze_client(const std::string& client_id,
                              const std::vector<std::vector<double>>& columns,
                              double reweight_exponent) {
  check_exponent(reweight_exponent);
  AccuracyReport report{client_id, 0.0, reweight_exponent};
  for (const auto& column : columns) {
    const auto fit = distfit::auto_fit(column);
    report.sig_acc += accuracy_significance(column, fit, reweight_exponent);
  }
  return report;
}

}  // namespace hqfl::accuracy
