// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/rng.hpp"

namespace hqfl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a
std::uint64_t hash_text(std::string_view text, std::uint64_t h) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view client_id,
                          std::string_view purpose) {
  std::uint64_t h = splitmix64(global_seed);
  h = hash_text(client_id, h ^ 0xcbf29ce484222325ULL);
  h = splitmix64(h);
  h = hash_text(purpose, h);
  return splitmix64(h);
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view purpose) {
  return derive_seed(global_seed, "", purpose);
}

}  // namespace hqfl
