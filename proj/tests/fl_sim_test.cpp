// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "hqfl/error.hpp"
#include "hqfl/fl_sim.hpp"

namespace hqfl::sim {
namespace {

using testing::hierarchical_config;
using testing::small_config;

std::vector<quant::QuantizedTensor> quantized_init(const ModelSpec& spec, std::uint64_t seed) {
  const nn::Mlp m(spec, seed);
  std::vector<quant::QuantizedTensor> out;
  const auto shapes = m.tensor_shapes();
  const auto t = m.tensors();
  for (std::size_t i = 0; i < t.size(); ++i) out.push_back(quant::quantize_calibrated(t[i], shapes[i]));
  return out;
}

TEST(ConfigValidateTest, Contracts) {
  auto c = small_config(3);
  EXPECT_NO_THROW(c.validate());
  c.rounds = 0;
  EXPECT_THROW(c.validate(), InputError);
  c = small_config(3);
  c.comm_bandwidth_mbps = 0.0;
  EXPECT_THROW(c.validate(), InputError);
  c = small_config(3);
  c.clients[1].profile.id = c.clients[0].profile.id;
  EXPECT_THROW(c.validate(), InputError);
  c = small_config(3);
  c.clients[0].parent = "nowhere";
  EXPECT_THROW(c.validate(), InputError);
  c = hierarchical_config(4);
  EXPECT_NO_THROW(c.validate());
  c.aggregators.push_back({"empty", "", std::nullopt});
  EXPECT_THROW(c.validate(), InputError);
}

TEST(ConfigValidateTest, AggregatorCycleIsRejected) {
  auto c = small_config(2);
  c.aggregators = {{"a", "b", std::nullopt}, {"b", "a", std::nullopt}};
  c.clients[0].parent = "a";
  EXPECT_THROW(c.validate(), InputError);
}

TEST(TopologyTest, BuiltFromParents) {
  const auto t = hierarchical_config(4).topology();
  EXPECT_EQ(t.depth(), 3);
  EXPECT_EQ(t.clients_under("e1"), (std::vector<std::string>{"c00", "c01"}));
  EXPECT_EQ(t.path_to("c03"), (std::vector<std::string>{"server", "e2", "c03"}));
}

TEST(GenerateDataTest, DeterministicAndVolumesHonoured) {
  const auto c = small_config(4);
  const auto a = generate_data(c);
  const auto b = generate_data(c);
  for (const auto& cl : c.clients) {
    const auto& d = a.clients.at(cl.profile.id);
    EXPECT_EQ(static_cast<std::int64_t>(d.size()), cl.profile.data_volume);
    EXPECT_EQ(d.features, b.clients.at(cl.profile.id).features);
    for (int y : d.labels) {
      EXPECT_GE(y, 0);
      EXPECT_LT(y, 3);
    }
  }
  EXPECT_EQ(a.test.features, b.test.features);
  EXPECT_EQ(a.test.size(), 200u);
  auto other = c;
  other.global_seed = 7;
  EXPECT_NE(generate_data(other).test.features, a.test.features);
}

TEST(GenerateDataTest, HugeConcentrationIsNearUniform) {
  auto c = small_config(2);
  c.dirichlet_concentration = 1e4;
  c.clients[0].profile.data_volume = 10000;
  const auto d = generate_data(c);
  std::vector<int> counts(3, 0);
  for (int y : d.clients.at("c00").labels) ++counts[y];
  for (int n : counts) EXPECT_NEAR(n / 10000.0, 1.0 / 3.0, 0.05 / 3.0);
}

TEST(GenerateDataTest, SmallConcentrationSkewsLabels) {
  auto c = small_config(6);
  c.dirichlet_concentration = 0.1;
  for (auto& cl : c.clients) cl.profile.data_volume = 3000;
  const auto d = generate_data(c);
  double worst = 0.0;
  for (const auto& [id, ds] : d.clients) {
    std::vector<int> counts(3, 0);
    for (int y : ds.labels) ++counts[y];
    worst = std::max(worst, *std::max_element(counts.begin(), counts.end()) / 3000.0);
  }
  EXPECT_GT(worst, 0.6);
}

TEST(SubsampleTest, KeepsLabelProportions) {
  auto c = small_config(2);
  c.clients[1].profile.data_volume = 1000;
  const auto d = generate_data(c).clients.at("c01");
  const auto s = stratified_subsample(d, 0.1, 5);
  EXPECT_EQ(s.size(), 100u);
  std::vector<int> full(3, 0);
  std::vector<int> sub(3, 0);
  for (int y : d.labels) ++full[y];
  for (int y : s.labels) ++sub[y];
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(sub[k], full[k] / 10.0, 1.0);
  EXPECT_THROW(stratified_subsample(d, 0.0, 1), InputError);
  EXPECT_EQ(stratified_subsample(d, 1.0, 1).features, d.features);
}

TEST(ClientRoundTest, ZeroLearningRateUplinksTheInput) {
  const auto c = small_config(2);
  const auto data = generate_data(c);
  const auto global = quantized_init(c.model, 3);
  auto client = c.clients[0];
  client.profile.epochs_per_round = 1;
  const auto r = client_round(client, c.model, global, QuantStrategy::PTQ, data.clients.at("c00"), {0.0, 1, 42});
  ASSERT_EQ(r.weights.size(), global.size());
  for (std::size_t i = 0; i < global.size(); ++i) {
    EXPECT_EQ(r.weights[i], quant::quantize_calibrated(quant::dequantize(global[i]), global[i].shape));
  }
}

TEST(ClientRoundTest, QatIsSlowerAndBytesAreAccounted) {
  const auto c = small_config(2);
  const auto data = generate_data(c);
  const auto global = quantized_init(c.model, 3);
  const auto p = client_round(c.clients[0], c.model, global, QuantStrategy::PTQ, data.clients.at("c00"), {});
  const auto q = client_round(c.clients[0], c.model, global, QuantStrategy::QAT, data.clients.at("c00"), {});
  EXPECT_GE(q.train_time_s, p.train_time_s);
  EXPECT_EQ(p.bytes_up, c.model.param_count() + 12 * c.model.tensor_count());
  // INT8 payload is a quarter of FP32 before overhead.
  EXPECT_EQ(4 * (p.bytes_up - 12 * c.model.tensor_count()), c.model.bytes_fp32());
}

TEST(AggregateTest, WeightsNormalised) {
  const double v[] = {1.0, 3.0, 4.0};
  const auto w = aggregation_weights(v, Weighting::Volume);
  EXPECT_DOUBLE_EQ(std::accumulate(w.begin(), w.end(), 0.0), 1.0);
  EXPECT_DOUBLE_EQ(w[1], 3.0 / 8.0);
  const auto u = aggregation_weights(v, Weighting::Uniform);
  EXPECT_DOUBLE_EQ(u[2], 1.0 / 3.0);
}

TEST(AggregateTest, WeightedMeanBeforeRequantization) {
  const std::vector<double> a{1.0, -2.0, 0.5};
  const std::vector<double> b{3.0, 2.0, -0.5};
  const quant::QuantParams p{0.03, 0, 8};
  const TensorUpdate kids[] = {{quant::quantize(a, p), 1.0}, {quant::quantize(b, p), 3.0}};
  const auto out = aggregate(kids);
  const auto back = quant::dequantize(out);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(back[i], (a[i] + 3.0 * b[i]) / 4.0, out.params.scale / 2.0 + 1e-12);
  }
}

TEST(AggregateTest, IdenticalAndSingleChildren) {
  std::vector<double> x{0.3, -0.7, 1.1, 0.05};
  const auto q = quant::quantize_calibrated(x);
  const TensorUpdate two[] = {{q, 2.0}, {q, 2.0}};
  const auto out = aggregate(two);
  const auto back = quant::dequantize(out);
  const TensorUpdate one[] = {{q, 5.0}};
  EXPECT_EQ(aggregate(one), q);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], out.params.scale / 2.0 + 1e-12);
}

TEST(AggregateTest, ShapeMismatchRejected) {
  const TensorUpdate kids[] = {{quant::quantize_calibrated(std::vector<double>{1.0, 2.0}), 1.0},
                               {quant::quantize_calibrated(std::vector<double>{1.0, 2.0, 3.0}), 1.0}};
  EXPECT_THROW(aggregate(kids), ShapeMismatch);
}

TEST(RunTest, BarrierLawAndDeterminism) {
  const auto c = hierarchical_config(4);
  const auto a = uniform_assignment(c.client_ids(), QuantStrategy::PTQ, AssignmentSource::InitSlope);
  const auto r1 = run(c, a);
  const auto r2 = run(c, a);
  ASSERT_EQ(r1.rounds.size(), 2u);
  for (std::size_t i = 0; i < r1.rounds.size(); ++i) {
    EXPECT_EQ(to_jsonl(r1.rounds[i]), to_jsonl(r2.rounds[i]));
    double peak = 0.0;
    for (const auto& [id, st] : r1.rounds[i].clients) peak = std::max(peak, st.completion_s);
    EXPECT_EQ(r1.rounds[i].wall_clock_s, peak);
    EXPECT_GE(r1.rounds[i].accuracy, 0.0);
    EXPECT_LE(r1.rounds[i].accuracy, 1.0);
  }
  EXPECT_EQ(r1.final_weights, r2.final_weights);
}

TEST(RunTest, ClockOrderingAcrossStrategies) {
  const auto c = small_config(4);
  const auto ids = c.client_ids();
  const auto ptq = run(c, uniform_assignment(ids, QuantStrategy::PTQ, AssignmentSource::InitSlope));
  const auto qat = run(c, uniform_assignment(ids, QuantStrategy::QAT, AssignmentSource::InitSlope));
  auto mixed = uniform_assignment(ids, QuantStrategy::PTQ, AssignmentSource::InitSlope);
  mixed["c01"].strategy = QuantStrategy::QAT;
  const auto hyb = run(c, mixed);
  for (std::size_t r = 0; r < ptq.rounds.size(); ++r) {
    EXPECT_LE(ptq.rounds[r].wall_clock_s, hyb.rounds[r].wall_clock_s);
    EXPECT_LE(hyb.rounds[r].wall_clock_s, qat.rounds[r].wall_clock_s);
  }
  EXPECT_LT(ptq.total_wall_clock_s(), qat.total_wall_clock_s());
}

TEST(RunTest, AssignmentMustCoverClients) {
  const auto c = small_config(3);
  auto a = uniform_assignment(c.client_ids(), QuantStrategy::PTQ, AssignmentSource::InitSlope);
  a.erase("c01");
  EXPECT_THROW(run(c, a), InputError);
}

TEST(RunTest, SlowerUplinkLengthensTheRound) {
  auto c = small_config(2);
  const auto a = uniform_assignment(c.client_ids(), QuantStrategy::PTQ, AssignmentSource::InitSlope);
  const auto fast = run(c, a);
  c.clients[0].bandwidth_mbps = 0.01;
  const auto slow = run(c, a);
  EXPECT_GT(slow.rounds[0].clients.at("c00").comm_time_s, fast.rounds[0].clients.at("c00").comm_time_s);
  EXPECT_GT(slow.total_wall_clock_s(), fast.total_wall_clock_s());
}

TEST(JsonlTest, RoundTrip) {
  const auto c = small_config(2);
  const auto r = run(c, uniform_assignment(c.client_ids(), QuantStrategy::QAT, AssignmentSource::Adjusted));
  for (const auto& rec : r.rounds) {
    const auto line = to_jsonl(rec);
    const auto back = parse_jsonl_line(line);
    EXPECT_EQ(back.round, rec.round);
    EXPECT_EQ(back.wall_clock_s, rec.wall_clock_s);
    EXPECT_EQ(back.loss, rec.loss);
    EXPECT_EQ(to_jsonl(back), line);
  }
  EXPECT_THROW(parse_jsonl_line("{\"round\": 1}"), InputError);
  EXPECT_THROW(parse_jsonl_line("nope"), InputError);
}

}  // namespace
}  // namespace hqfl::sim
