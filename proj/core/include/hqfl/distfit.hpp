// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Client-side distribution fitting over nine candidate families.
//
// Each family is fitted with a closed-form MLE where one exists and with the
// method of moments otherwise; moment fits are then refined by a bounded
// golden-section search on a single parameter that minimises the
// Kolmogorov-Smirnov distance. auto_fit keeps the family with the strictly
// smallest KS distance, walking the families in their canonical order so that
// ties go to the earlier family.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hqfl::distfit {

enum class Family { Normal, PowerLaw, Binomial, Poisson, LogNormal, StudentT, Logistic, Beta, Gamma };

inline constexpr std::array<Family, 9> kFamilies = {
    Family::Normal,  Family::PowerLaw, Family::Binomial, Family::Poisson, Family::LogNormal,
    Family::StudentT, Family::Logistic, Family::Beta,    Family::Gamma,
};

inline constexpr std::size_t kMinSamples = 8;
inline constexpr double kSigmaFloor = 1e-9;
// Beta data is mapped x -> eps + (1 - 2 eps) x so that 0 and 1 stay inside the support.
inline constexpr double kBetaEpsilon = 1e-6;

std::string_view to_string(Family f);
Family parse_family(std::string_view text);
// Parameter names in canonical order, e.g. {"mu", "sigma"} for Normal.
std::vector<std::string_view> param_names(Family f);
bool is_discrete(Family f);

// A family together with its parameter values (ordered as param_names).
struct Distribution {
  Family family = Family::Normal;
  std::vector<double> params;

  double param(std::string_view name) const;
  // Throws InputError when a parameter lies outside the family's domain.
  void validate() const;

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

Distribution make(Family f, std::vector<double> params);

// Right-continuous CDF in data space (Beta includes the epsilon map).
double cdf(const Distribution& d, double x);
// Left limit F(x-); equals cdf() for continuous families.
double cdf_left(const Distribution& d, double x);

struct Moments {
  double mean = 0.0;
  double scale = 0.0;  // standard deviation
  bool mean_defined = true;
  bool scale_defined = true;
};

// Inverse CDF in data space, p in (0, 1).
double quantile(const Distribution& d, double p);

// Analytic mean and standard deviation in data space.
Moments analytic_moments(const Distribution& d);

struct FitResult {
  Distribution distribution;
  double goodness = 0.0;
  // Analytic moment when defined, otherwise the robust fallback
  // (median, 1.4826 * MAD) and the matching *_defined flag is false.
  double mean = 0.0;
  double scale = 1.0;
  bool mean_defined = true;
  bool scale_defined = true;

  friend bool operator==(const FitResult&, const FitResult&) = default;
};

// Throws UnsupportedSupport when the data is outside the family's support
// (or is constant, for every family but Normal) and InputError for fewer
// than kMinSamples values or non-finite values.
Distribution fit_family(std::span<const double> data, Family family);

// Kolmogorov-Smirnov statistic sup |ECDF - CDF|, in [0, 1].
double evaluate_goodness(std::span<const double> data, const Distribution& d);

FitResult auto_fit(std::span<const double> data);

std::vector<double> sample(const Distribution& d, std::size_t count, std::uint64_t seed);

}  // namespace hqfl::distfit
