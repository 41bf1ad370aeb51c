// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small simulator configurations shared by the tests.

#pragma once

#include <string>

#include "hqfl/fl_sim.hpp"

namespace hqfl::testing {

inline std::string client_name(int i) { return i < 10 ? "c0" + std::to_string(i) : "c" + std::to_string(i); }

// `n` clients directly under the server; volume and epochs vary per client.
inline sim::SimConfig small_config(int n, std::uint64_t seed = 42) {
  sim::SimConfig c;
  c.rounds = 2;
  c.global_seed = seed;
  c.test_size = 200;
  c.model.layer_widths = {4, 8, 3};
  for (int i = 0; i < n; ++i) {
    sim::ClientSpec s;
    s.profile.id = client_name(i);
    s.profile.memory_mb = 64.0;
    s.profile.compute_gops = 0.01;
    s.profile.data_volume = 40 + 20 * i;
    s.profile.epochs_per_round = 1 + i % 2;
    s.hardware.batch_mem_intercept_mb = 32.0;
    s.hardware.batch_mem_slope_mb = 4.0;
    c.clients.push_back(s);
  }
  return c;
}

// Server -> {e1 -> first half, e2 -> second half}.
inline sim::SimConfig hierarchical_config(int n, std::uint64_t seed = 42) {
  auto c = small_config(n, seed);
  c.aggregators = {{"e1", "", std::nullopt}, {"e2", "", 50.0}};
  for (int i = 0; i < n; ++i) c.clients[i].parent = i < n / 2 ? "e1" : "e2";
  return c;
}

}  // namespace hqfl::testing
