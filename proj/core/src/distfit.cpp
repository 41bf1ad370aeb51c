// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "hqfl/error.hpp"

namespace hqfl::distfit {

namespace {

constexpr int kGoldenSteps = 30;
constexpr int kBinomialScan = 50;
constexpr double kStudentTMinDof = 0.2;
constexpr double kStudentTMaxDof = 500.0;
constexpr double kMadToSigma = 1.4826;

struct Summary {
  double mean = 0.0;
  double var = 0.0;  // population variance
  double min = 0.0;
  double max = 0.0;
};

Summary summarize(std::span<const double> data) {
  Summary s;
  s.min = data.front();
  s.max = data.front();
  double sum = 0.0;
  for (double x : data) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / static_cast<double>(data.size());
  double ss = 0.0;
  for (double x : data) ss += (x - s.mean) * (x - s.mean);
  s.var = ss / static_cast<double>(data.size());
  return s;
}

void check_input(std::span<const double> data) {
  if (data.size() < kMinSamples) {
    throw InputError("distribution fitting needs at least " + std::to_string(kMinSamples) +
                     " values, got " + std::to_string(data.size()));
  }
  for (double x : data) {
    if (!std::isfinite(x)) throw NonFiniteInput("distribution fitting received a non-finite value");
  }
}

[[noreturn]] void unsupported(Family f, const char* why) {
  throw UnsupportedSupport(std::string(to_string(f)) + ": " + why);
}

std::vector<double> sorted_copy(std::span<const double> data) {
  std::vector<double> out(data.begin(), data.end());
  std::sort(out.begin(), out.end());
  return out;
}

double ks_sorted(const std::vector<double>& xs, const Distribution& d) {
  const double n = static_cast<double>(xs.size());
  const bool discrete = is_discrete(d.family);
  // Discrete CDFs only change at integers; xs is sorted, so one cached step
  // serves every value with the same floor.
  double cached_k = std::numeric_limits<double>::quiet_NaN();
  double cached_cdf = 0.0;
  auto step_cdf = [&](double k) {
    if (k != cached_k) {
      cached_k = k;
      cached_cdf = cdf(d, k);
    }
    return cached_cdf;
  };
  double best = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    std::size_t j = i;
    while (j < xs.size() && xs[j] == xs[i]) ++j;
    const double below = static_cast<double>(i) / n;
    const double at = static_cast<double>(j) / n;
    double f_at = 0.0;
    double f_left = 0.0;
    if (discrete) {
      const double k = std::floor(xs[i]);
      f_left = k == xs[i] ? step_cdf(k - 1.0) : step_cdf(k);
      f_at = step_cdf(k);
    } else {
      f_at = cdf(d, xs[i]);
      f_left = f_at;
    }
    best = std::max(best, std::abs(at - f_at));
    best = std::max(best, std::abs(below - f_left));
    i = j;
  }
  return std::clamp(best, 0.0, 1.0);
}

// Minimises f over [lo, hi]; returns the best abscissa seen.
double golden_section(const std::function<double(double)>& f, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int step = 0; step < kGoldenSteps; ++step) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

// Refines one positive parameter in log space around `start`, never returning
// something worse than `start` itself.
double refine_positive(const std::vector<double>& xs, double start, double lo, double hi,
                       const std::function<Distribution(double)>& build) {
  auto objective = [&](double log_value) { return ks_sorted(xs, build(std::exp(log_value))); };
  const double refined = std::exp(golden_section(objective, std::log(lo), std::log(hi)));
  return ks_sorted(xs, build(refined)) < ks_sorted(xs, build(start)) ? refined : start;
}

double median_of_sorted(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double beta_map(double x) { return kBetaEpsilon + (1.0 - 2.0 * kBetaEpsilon) * x; }

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Normal: return "Normal";
    case Family::PowerLaw: return "PowerLaw";
    case Family::Binomial: return "Binomial";
    case Family::Poisson: return "Poisson";
    case Family::LogNormal: return "LogNormal";
    case Family::StudentT: return "StudentT";
    case Family::Logistic: return "Logistic";
    case Family::Beta: return "Beta";
    case Family::Gamma: return "Gamma";
  }
  return "Normal";
}

Family parse_family(std::string_view text) {
  for (Family f : kFamilies) {
    if (to_string(f) == text) return f;
  }
  throw InputError("unknown distribution family '" + std::string(text) + "'");
}

std::vector<std::string_view> param_names(Family f) {
  switch (f) {
    case Family::Normal: return {"mu", "sigma"};
    case Family::PowerLaw: return {"alpha", "x_min"};
    case Family::Binomial: return {"n", "p"};
    case Family::Poisson: return {"lambda"};
    case Family::LogNormal: return {"mu", "sigma"};
    case Family::StudentT: return {"n"};
    case Family::Logistic: return {"mu", "s"};
    case Family::Beta: return {"alpha", "beta"};
    case Family::Gamma: return {"k", "theta"};
  }
  return {};
}

bool is_discrete(Family f) { return f == Family::Binomial || f == Family::Poisson; }

double Distribution::param(std::string_view name) const {
  const auto names = param_names(family);
  for (std::size_t i = 0; i < names.size() && i < params.size(); ++i) {
    if (names[i] == name) return params[i];
  }
  throw InputError(std::string(to_string(family)) + " has no parameter '" + std::string(name) + "'");
}

void Distribution::validate() const {
  const auto names = param_names(family);
  if (params.size() != names.size()) {
    throw InputError(std::string(to_string(family)) + " expects " + std::to_string(names.size()) +
                     " parameters");
  }
  for (double v : params) {
    if (!std::isfinite(v)) throw InputError(std::string(to_string(family)) + " parameter is not finite");
  }
  auto require = [this](bool ok, const char* what) {
    if (!ok) throw InputError(std::string(to_string(family)) + ": " + what);
  };
  switch (family) {
    case Family::Normal:
    case Family::LogNormal: require(params[1] > 0.0, "sigma must be > 0"); break;
    case Family::PowerLaw:
      require(params[0] > 0.0 && params[1] > 0.0, "alpha and x_min must be > 0");
      break;
    case Family::Binomial:
      require(params[0] >= 1.0 && params[0] == std::floor(params[0]), "n must be an integer >= 1");
      require(params[1] >= 0.0 && params[1] <= 1.0, "p must lie in [0, 1]");
      break;
    case Family::Poisson: require(params[0] > 0.0, "lambda must be > 0"); break;
    case Family::StudentT: require(params[0] > 0.0, "n must be > 0"); break;
    case Family::Logistic: require(params[1] > 0.0, "s must be > 0"); break;
    case Family::Beta: require(params[0] > 0.0 && params[1] > 0.0, "alpha and beta must be > 0"); break;
    case Family::Gamma: require(params[0] > 0.0 && params[1] > 0.0, "k and theta must be > 0"); break;
  }
}

Distribution make(Family f, std::vector<double> params) {
  Distribution d{f, std::move(params)};
  d.validate();
  return d;
}

double cdf(const Distribution& d, double x) {
  namespace bm = boost::math;
  const auto& p = d.params;
  switch (d.family) {
    case Family::Normal:
      return bm::cdf(bm::normal_distribution<double>(p[0], p[1]), x);
    case Family::PowerLaw:
      return x < p[1] ? 0.0 : 1.0 - std::pow(p[1] / x, p[0]);
    case Family::Binomial: {
      const double k = std::floor(x);
      if (k < 0.0) return 0.0;
      if (k >= p[0]) return 1.0;
      return bm::cdf(bm::binomial_distribution<double>(p[0], p[1]), k);
    }
    case Family::Poisson: {
      const double k = std::floor(x);
      if (k < 0.0) return 0.0;
      return bm::cdf(bm::poisson_distribution<double>(p[0]), k);
    }
    case Family::LogNormal:
      return x <= 0.0 ? 0.0 : bm::cdf(bm::lognormal_distribution<double>(p[0], p[1]), x);
    case Family::StudentT:
      return bm::cdf(bm::students_t_distribution<double>(p[0]), x);
    case Family::Logistic:
      return 1.0 / (1.0 + std::exp(-(x - p[0]) / p[1]));
    case Family::Beta: {
      const double y = beta_map(x);
      if (y <= 0.0) return 0.0;
      if (y >= 1.0) return 1.0;
      return bm::ibeta(p[0], p[1], y);
    }
    case Family::Gamma:
      return x <= 0.0 ? 0.0 : bm::gamma_p(p[0], x / p[1]);
  }
  return 0.0;
}

double quantile(const Distribution& d, double prob) {
  namespace bm = boost::math;
  if (!(prob > 0.0 && prob < 1.0)) throw InputError("quantile probability must lie in (0, 1)");
  const auto& p = d.params;
  switch (d.family) {
    case Family::Normal:
      return bm::quantile(bm::normal_distribution<double>(p[0], p[1]), prob);
    case Family::PowerLaw:
      return p[1] * std::pow(1.0 - prob, -1.0 / p[0]);
    case Family::Binomial:
      return bm::quantile(bm::binomial_distribution<double>(p[0], p[1]), prob);
    case Family::Poisson:
      return bm::quantile(bm::poisson_distribution<double>(p[0]), prob);
    case Family::LogNormal:
      return bm::quantile(bm::lognormal_distribution<double>(p[0], p[1]), prob);
    case Family::StudentT:
      return bm::quantile(bm::students_t_distribution<double>(p[0]), prob);
    case Family::Logistic:
      return p[0] + p[1] * std::log(prob / (1.0 - prob));
    case Family::Beta:
      return (bm::ibeta_inv(p[0], p[1], prob) - kBetaEpsilon) / (1.0 - 2.0 * kBetaEpsilon);
    case Family::Gamma:
      return p[1] * bm::gamma_p_inv(p[0], prob);
  }
  return 0.0;
}

double cdf_left(const Distribution& d, double x) {
  if (is_discrete(d.family) && x == std::floor(x)) return cdf(d, x - 1.0);
  return cdf(d, x);
}

Moments analytic_moments(const Distribution& d) {
  const auto& p = d.params;
  Moments m;
  switch (d.family) {
    case Family::Normal:
      m.mean = p[0];
      m.scale = p[1];
      break;
    case Family::PowerLaw: {
      const double alpha = p[0];
      const double xmin = p[1];
      m.mean_defined = alpha > 1.0;
      m.scale_defined = alpha > 2.0;
      if (m.mean_defined) m.mean = alpha * xmin / (alpha - 1.0);
      if (m.scale_defined) m.scale = xmin / (alpha - 1.0) * std::sqrt(alpha / (alpha - 2.0));
      break;
    }
    case Family::Binomial:
      m.mean = p[0] * p[1];
      m.scale = std::sqrt(p[0] * p[1] * (1.0 - p[1]));
      break;
    case Family::Poisson:
      m.mean = p[0];
      m.scale = std::sqrt(p[0]);
      break;
    case Family::LogNormal: {
      const double s2 = p[1] * p[1];
      m.mean = std::exp(p[0] + 0.5 * s2);
      m.scale = std::sqrt(std::expm1(s2)) * m.mean;
      break;
    }
    case Family::StudentT:
      m.mean_defined = p[0] > 1.0;
      m.scale_defined = p[0] > 2.0;
      if (m.scale_defined) m.scale = std::sqrt(p[0] / (p[0] - 2.0));
      break;
    case Family::Logistic:
      m.mean = p[0];
      m.scale = p[1] * std::numbers::pi / std::sqrt(3.0);
      break;
    case Family::Beta: {
      const double a = p[0];
      const double b = p[1];
      const double mean_y = a / (a + b);
      const double sd_y = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
      m.mean = (mean_y - kBetaEpsilon) / (1.0 - 2.0 * kBetaEpsilon);
      m.scale = sd_y / (1.0 - 2.0 * kBetaEpsilon);
      break;
    }
    case Family::Gamma:
      m.mean = p[0] * p[1];
      m.scale = std::sqrt(p[0]) * p[1];
      break;
  }
  return m;
}

Distribution fit_family(std::span<const double> data, Family family) {
  check_input(data);
  const Summary s = summarize(data);
  const bool constant = s.max == s.min;

  if (family == Family::Normal) {
    return make(Family::Normal, {s.mean, std::max(std::sqrt(s.var), kSigmaFloor)});
  }
  if (constant) unsupported(family, "constant data has no spread to fit");

  const auto xs = sorted_copy(data);
  switch (family) {
    case Family::Normal: break;
    case Family::PowerLaw: {
      if (s.min <= 0.0) unsupported(family, "support is x > 0");
      double log_sum = 0.0;
      for (double x : data) log_sum += std::log(x / s.min);
      return make(family, {static_cast<double>(data.size()) / log_sum, s.min});
    }
    case Family::Binomial: {
      if (s.min < 0.0) unsupported(family, "support is x >= 0");
      const double first = std::max(1.0, std::ceil(s.max));
      Distribution best = make(family, {first, std::min(1.0, s.mean / first)});
      double best_ks = ks_sorted(xs, best);
      for (int step = 1; step <= kBinomialScan; ++step) {
        const double n = first + step;
        Distribution cand = make(family, {n, s.mean / n});
        const double ks = ks_sorted(xs, cand);
        if (ks < best_ks) {
          best_ks = ks;
          best = std::move(cand);
        }
      }
      return best;
    }
    case Family::Poisson:
      if (s.min < 0.0) unsupported(family, "support is x >= 0");
      return make(family, {s.mean});
    case Family::LogNormal: {
      if (s.min <= 0.0) unsupported(family, "support is x > 0");
      std::vector<double> logs(data.size());
      std::transform(data.begin(), data.end(), logs.begin(), [](double x) { return std::log(x); });
      const Summary ls = summarize(logs);
      return make(family, {ls.mean, std::max(std::sqrt(ls.var), kSigmaFloor)});
    }
    case Family::StudentT: {
      const double start =
          s.var > 1.0 ? std::clamp(2.0 * s.var / (s.var - 1.0), kStudentTMinDof, kStudentTMaxDof)
                      : kStudentTMaxDof;
      const double dof = refine_positive(xs, start, kStudentTMinDof, kStudentTMaxDof,
                                         [](double n) { return Distribution{Family::StudentT, {n}}; });
      return make(family, {dof});
    }
    case Family::Logistic: {
      const double start = std::sqrt(3.0 * s.var) / std::numbers::pi;
      const double mu = s.mean;
      const double scale = refine_positive(xs, start, start / 4.0, start * 4.0, [mu](double v) {
        return Distribution{Family::Logistic, {mu, v}};
      });
      return make(family, {mu, scale});
    }
    case Family::Beta: {
      if (s.min < 0.0 || s.max > 1.0) unsupported(family, "support is [0, 1]");
      const double m = beta_map(s.mean);
      const double v = s.var * (1.0 - 2.0 * kBetaEpsilon) * (1.0 - 2.0 * kBetaEpsilon);
      const double start = m * (1.0 - m) / v - 1.0;
      if (!(start > 0.0)) unsupported(family, "variance too large for a Beta law");
      const double conc = refine_positive(xs, start, start / 4.0, start * 4.0, [m](double c) {
        return Distribution{Family::Beta, {m * c, (1.0 - m) * c}};
      });
      return make(family, {m * conc, (1.0 - m) * conc});
    }
    case Family::Gamma: {
      if (s.min <= 0.0) unsupported(family, "support is x > 0");
      const double start = s.mean * s.mean / s.var;
      const double mean = s.mean;
      const double shape = refine_positive(xs, start, start / 4.0, start * 4.0, [mean](double k) {
        return Distribution{Family::Gamma, {k, mean / k}};
      });
      return make(family, {shape, mean / shape});
    }
  }
  unsupported(family, "unknown family");
}

double evaluate_goodness(std::span<const double> data, const Distribution& d) {
  check_input(data);
  d.validate();
  return ks_sorted(sorted_copy(data), d);
}

FitResult auto_fit(std::span<const double> data) {
  check_input(data);
  const auto xs = sorted_copy(data);

  FitResult result;
  bool found = false;
  for (Family f : kFamilies) {
    Distribution candidate;
    try {
      candidate = fit_family(data, f);
    } catch (const UnsupportedSupport&) {
      continue;
    }
    const double goodness = ks_sorted(xs, candidate);
    if (!found || goodness < result.goodness) {
      found = true;
      result.distribution = std::move(candidate);
      result.goodness = goodness;
    }
  }
  if (!found) throw NoApplicableFamily("no distribution family applies to the data");

  const Moments m = analytic_moments(result.distribution);
  const double median = median_of_sorted(xs);
  result.mean_defined = m.mean_defined;
  result.scale_defined = m.scale_defined;
  result.mean = m.mean_defined ? m.mean : median;
  if (m.scale_defined) {
    result.scale = m.scale;
  } else {
    std::vector<double> dev(xs.size());
    std::transform(xs.begin(), xs.end(), dev.begin(), [median](double x) { return std::abs(x - median); });
    std::sort(dev.begin(), dev.end());
    result.scale = kMadToSigma * median_of_sorted(dev);
  }
  result.scale = std::max(result.scale, kSigmaFloor);
  return result;
}

std::vector<double> sample(const Distribution& d, std::size_t count, std::uint64_t seed) {
  d.validate();
  std::mt19937_64 gen(seed);
  std::vector<double> out;
  out.reserve(count);
  const auto& p = d.params;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto open_unit = [&] {
    double u = 0.0;
    do u = unit(gen);
    while (u <= 0.0);
    return u;
  };

  switch (d.family) {
    case Family::Normal: {
      std::normal_distribution<double> dist(p[0], p[1]);
      for (std::size_t i = 0; i < count; ++i) out.push_back(dist(gen));
      break;
    }
    case Family::PowerLaw:
      for (std::size_t i = 0; i < count; ++i) out.push_back(p[1] * std::pow(open_unit(), -1.0 / p[0]));
      break;
    case Family::Binomial: {
      std::binomial_distribution<long long> dist(static_cast<long long>(p[0]), p[1]);
      for (std::size_t i = 0; i < count; ++i) out.push_back(static_cast<double>(dist(gen)));
      break;
    }
    case Family::Poisson: {
      std::poisson_distribution<long long> dist(p[0]);
      for (std::size_t i = 0; i < count; ++i) out.push_back(static_cast<double>(dist(gen)));
      break;
    }
    case Family::LogNormal: {
      std::lognormal_distribution<double> dist(p[0], p[1]);
      for (std::size_t i = 0; i < count; ++i) out.push_back(dist(gen));
      break;
    }
    case Family::StudentT: {
      std::student_t_distribution<double> dist(p[0]);
      for (std::size_t i = 0; i < count; ++i) out.push_back(dist(gen));
      break;
    }
    case Family::Logistic:
      for (std::size_t i = 0; i < count; ++i) {
        const double u = open_unit();
        out.push_back(p[0] + p[1] * (std::log(u) - std::log1p(-u)));
      }
      break;
    case Family::Beta: {
      std::gamma_distribution<double> ga(p[0], 1.0);
      std::gamma_distribution<double> gb(p[1], 1.0);
      constexpr double lo = std::numeric_limits<double>::min();
      const double hi = std::nextafter(1.0, 0.0);
      for (std::size_t i = 0; i < count; ++i) {
        const double a = ga(gen);
        const double b = gb(gen);
        const double v = (a + b) > 0.0 ? a / (a + b) : 0.5;
        out.push_back(std::clamp(v, lo, hi));
      }
      break;
    }
    case Family::Gamma: {
      std::gamma_distribution<double> dist(p[0], p[1]);
      for (std::size_t i = 0; i < count; ++i) out.push_back(dist(gen));
      break;
    }
  }
  return out;
}

}  // namespace hqfl::distfit
