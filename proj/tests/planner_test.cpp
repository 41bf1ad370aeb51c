// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hqfl/error.hpp"
#include "hqfl/planner.hpp"

namespace hqfl::planner {
namespace {

SignificancePair axes(double speed, double acc) {
  SignificancePair p;
  p.client_id = "x";
  p.axis_speed = speed;
  p.axis_acc = acc;
  return p;
}

std::vector<SignificancePair> raw(const std::vector<std::tuple<std::string, double, double>>& rows) {
  std::vector<SignificancePair> out;
  for (const auto& [id, s, a] : rows) {
    SignificancePair p;
    p.client_id = id;
    p.raw_speed = s;
    p.raw_acc = a;
    out.push_back(p);
  }
  return out;
}

TEST(CollectTest, AssemblesPairsSortedById) {
  const auto pairs = collect({{"b", 1.5}, {"a", 0.5}}, {{"a", 2.0}, {"b", 0.1}});
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].client_id, "a");
  EXPECT_EQ(pairs[0].raw_speed, 0.5);
  EXPECT_EQ(pairs[0].raw_acc, 2.0);
  EXPECT_EQ(pairs[1].raw_acc, 0.1);
}

TEST(CollectTest, DisjointKeysRaiseKeyMismatchListingBoth) {
  try {
    collect({{"a", 1.0}}, {{"b", 1.0}});
    FAIL() << "expected KeyMismatch";
  } catch (const KeyMismatch& e) {
    EXPECT_EQ(e.ids(), (std::vector<std::string>{"a", "b"}));
  }
}

TEST(CollectTest, TenClients) {
  std::map<std::string, double> s;
  std::map<std::string, double> a;
  for (int i = 9; i >= 0; --i) {
    s["c" + std::to_string(i)] = i;
    a["c" + std::to_string(i)] = 10 - i;
  }
  const auto pairs = collect(s, a);
  ASSERT_EQ(pairs.size(), 10u);
  EXPECT_TRUE(std::is_sorted(pairs.begin(), pairs.end(),
                             [](const auto& x, const auto& y) { return x.client_id < y.client_id; }));
}

TEST(NormalizeTest, DirectFormula) {
  const auto n = normalize({0.5, 1.0, 1.5}, 1e-3);
  EXPECT_DOUBLE_EQ(n[0], 1e-3 / 1.002);
  EXPECT_DOUBLE_EQ(n[1], 0.501 / 1.002);
  EXPECT_DOUBLE_EQ(n[2], 1.001 / 1.002);
  EXPECT_NEAR(n[1], 0.5, 1e-15);
}

TEST(NormalizeTest, DegenerateInputIsAllHalf) {
  EXPECT_EQ(normalize({7.0, 7.0, 7.0}), (std::vector<double>{0.5, 0.5, 0.5}));
  EXPECT_THROW(normalize({1.0}), NeedTwoValues);
}

TEST(NormalizeTest, OutputsStrictlyInsideUnitInterval) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(2 + trial % 20);
    for (auto& x : v) x = u(rng);
    for (double y : normalize(v)) {
      EXPECT_GT(y, 0.0);
      EXPECT_LT(y, 1.0);
    }
  }
}

TEST(OrientTest, InvertsBothAxes) {
  SignificancePair p;
  p.norm_speed = 0.1;
  p.norm_acc = 0.8;
  const auto o = orient_axes(p);
  EXPECT_DOUBLE_EQ(o.axis_speed, 0.9);
  EXPECT_DOUBLE_EQ(o.axis_acc, 0.2);
}

TEST(OrientTest, FastestClientHasLargestSpeedAxis) {
  const auto prepared = prepare(raw({{"slow", 3.0, 1.0}, {"fast", 0.4, 1.0}, {"mid", 1.2, 1.0}}), {});
  const auto best = std::max_element(prepared.begin(), prepared.end(),
                                     [](const auto& a, const auto& b) { return a.axis_speed < b.axis_speed; });
  EXPECT_EQ(best->client_id, "fast");
}

TEST(DispatchTest, ClientOneArchetypeIsQat) {
  const auto d = dispatch_one(axes(0.9, 0.2), {});
  EXPECT_EQ(d.strategy, QuantStrategy::QAT);
  EXPECT_EQ(d.source, AssignmentSource::InitSlope);
  EXPECT_NEAR(d.slope_ratio, 0.2 / 0.9, 1e-15);
}

TEST(DispatchTest, ClientTwoArchetypeIsPtq) {
  const auto d = dispatch_one(axes(0.2, 0.9), {});
  EXPECT_EQ(d.strategy, QuantStrategy::PTQ);
  EXPECT_EQ(d.source, AssignmentSource::InitSlope);
  EXPECT_NEAR(d.area, 0.09, 1e-15);
}

TEST(DispatchTest, SmallTriangleIsPtqByArea) {
  const auto d = dispatch_one(axes(0.3, 0.3), {});
  EXPECT_EQ(d.strategy, QuantStrategy::PTQ);
  EXPECT_EQ(d.source, AssignmentSource::InitArea);
  EXPECT_NEAR(d.area, 0.045, 1e-15);
}

TEST(DispatchTest, ThresholdAnchors) {
  DispatchConfig c;
  EXPECT_EQ(c.slope_threshold(), 0.25);
  c.xi = 0.5;
  EXPECT_EQ(c.slope_threshold(), 1.0);
}

TEST(DispatchTest, AreaRuleWinsRegardlessOfXi) {
  for (double xi : {0.01, 0.2, 0.5, 0.9, 0.99}) {
    DispatchConfig c;
    c.xi = xi;
    const auto d = dispatch_one(axes(0.95, 0.1), c);
    EXPECT_EQ(d.strategy, QuantStrategy::PTQ);
    EXPECT_EQ(d.source, AssignmentSource::InitArea);
  }
}

TEST(DispatchTest, RaisingAccuracyAxisNeverMovesPtqToQat) {
  const DispatchConfig c;
  for (double s = 0.05; s < 1.0; s += 0.05) {
    bool seen_ptq_by_slope = false;
    for (double a = 0.01; a < 1.0; a += 0.01) {
      const auto d = dispatch_one(axes(s, a), c);
      if (d.source == AssignmentSource::InitArea) continue;
      if (d.strategy == QuantStrategy::PTQ) seen_ptq_by_slope = true;
      if (seen_ptq_by_slope) {
        EXPECT_EQ(d.strategy, QuantStrategy::PTQ) << s << " " << a;
      }
    }
  }
}

TEST(GlobalInitTest, IdenticalClientsAreAllPtq) {
  const auto a = global_initialize(raw({{"a", 2.0, 3.0}, {"b", 2.0, 3.0}, {"c", 2.0, 3.0}}), {});
  for (const auto& [id, e] : a) {
    EXPECT_EQ(e.strategy, QuantStrategy::PTQ);
    EXPECT_EQ(e.source, AssignmentSource::InitSlope);
  }
}

TEST(GlobalInitTest, TwoClientsLandOnOppositeCornersAndAreAreaRuled) {
  // fast + dispersed: norm_speed ~ 0, norm_acc ~ 1, so axis_acc ~ 0.
  // slow + tight: norm_speed ~ 1, so axis_speed ~ 0.
  const auto a = global_initialize(raw({{"fast", 0.5, 9.0}, {"slow", 1.5, 1.0}}), {});
  EXPECT_EQ(a.at("fast").strategy, QuantStrategy::PTQ);
  EXPECT_EQ(a.at("fast").source, AssignmentSource::InitArea);
  EXPECT_EQ(a.at("slow").strategy, QuantStrategy::PTQ);
  EXPECT_EQ(a.at("slow").source, AssignmentSource::InitArea);
}

TEST(GlobalInitTest, FastModeratelyDispersedClientGetsQat) {
  // Cohort where "q" is fastest and its accuracy significance sits at ~80% of the range.
  const auto rows = raw({{"q", 1.0, 8.0}, {"s", 3.0, 10.0}, {"t", 2.0, 0.0}, {"u", 2.5, 5.0}});
  const auto a = global_initialize(rows, {});
  EXPECT_EQ(a.at("q").strategy, QuantStrategy::QAT);
  EXPECT_EQ(a.at("s").source, AssignmentSource::InitArea);
  EXPECT_EQ(a.at("t").strategy, QuantStrategy::PTQ);
}

TEST(GlobalInitTest, OrderAndSpeedScaleInvariant) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::tuple<std::string, double, double>> rows;
    for (int i = 0; i < 8; ++i) rows.emplace_back("c" + std::to_string(i), u(rng), u(rng));
    const auto base = global_initialize(raw(rows), {});
    auto shuffled = rows;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(global_initialize(raw(shuffled), {}), base);
    for (double k : {0.5, 3.0, 1000.0}) {
      auto scaled = rows;
      for (auto& r : scaled) std::get<1>(r) *= k;
      const auto s = global_initialize(raw(scaled), {});
      for (const auto& [id, e] : base) EXPECT_EQ(s.at(id).strategy, e.strategy);
    }
  }
}

TEST(GlobalInitTest, EveryClientReceivesAStrategyAndRangesAreStrict) {
  const auto rows = raw({{"a", 1.0, 4.0}, {"b", 5.0, 2.0}, {"c", 3.0, 3.0}, {"d", 2.0, 1.0}});
  const auto prepared = prepare(rows, {});
  for (const auto& p : prepared) {
    for (double v : {p.norm_speed, p.norm_acc, p.axis_speed, p.axis_acc}) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
  EXPECT_EQ(global_initialize(rows, {}).size(), 4u);
  EXPECT_THROW(global_initialize(raw({{"a", 1.0, 1.0}}), {}), NeedTwoClients);
}

TEST(FlagTest, ExactBoundaryFlaggedFarClientNot) {
  std::vector<SignificancePair> pairs{axes(0.8, 0.2), axes(0.8, 0.4)};
  pairs[0].client_id = "on";
  pairs[1].client_id = "far";
  DispatchConfig c;
  EXPECT_EQ(flag_boundary_clients(pairs, c), (std::vector<std::string>{"on"}));
  c.boundary_margin = 0.0;
  EXPECT_EQ(flag_boundary_clients(pairs, c), (std::vector<std::string>{"on"}));
}

TEST(FlagTest, MarginIsRelativeToThreshold) {
  std::vector<SignificancePair> pairs{axes(0.8, 0.8 * 0.27), axes(0.8, 0.8 * 0.28), axes(0.8, 0.8 * 0.23)};
  pairs[0].client_id = "in";
  pairs[1].client_id = "out";
  pairs[2].client_id = "in_below";
  EXPECT_EQ(flag_boundary_clients(pairs, {}), (std::vector<std::string>{"in", "in_below"}));
}

TEST(FlagTest, AreaRuledClientsAreNeverFlagged) {
  std::vector<SignificancePair> pairs{axes(0.4, 0.1)};
  DispatchConfig c;
  c.boundary_margin = 100.0;
  EXPECT_TRUE(flag_boundary_clients(pairs, c).empty());
}

TEST(AuditTest, OneRowPerClientMatchingDispatch) {
  const DispatchConfig c;
  const auto prepared = prepare(raw({{"b", 1.0, 4.0}, {"a", 5.0, 2.0}, {"c", 3.0, 3.0}}), c);
  const auto rows = audit(prepared, c);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].pair.client_id, "a");
  const auto assignment = global_initialize(prepared, c);
  for (const auto& r : rows) EXPECT_EQ(assignment.at(r.pair.client_id).strategy, r.decision.strategy);
}

TEST(ConfigTest, RejectsXiOutsideOpenInterval) {
  DispatchConfig c;
  c.xi = 1.0;
  EXPECT_THROW(c.validate(), InputError);
  c.xi = 0.0;
  EXPECT_THROW(c.validate(), InputError);
}

}  // namespace
}  // namespace hqfl::planner
