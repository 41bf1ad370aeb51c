// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hqfl {

// Stable 64-bit mix of (global seed, client id, purpose). Every random stream
// in the project is seeded through this so runs replay exactly.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view client_id,
                          std::string_view purpose);

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view purpose);

using Rng = std::mt19937_64;

}  // namespace hqfl
