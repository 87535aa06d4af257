// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace psipfl {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Derives an independent seed for a named stream ("partition", "split",
/// "model", ...) plus optional integer coordinates such as (round, client).
/// The same (base, name, coords) always yields the same seed.
std::uint64_t stream_seed(std::uint64_t base, std::string_view name,
                          std::initializer_list<std::uint64_t> coords = {}) noexcept;

inline Engine make_engine(std::uint64_t base, std::string_view name,
                          std::initializer_list<std::uint64_t> coords = {}) {
  return Engine(stream_seed(base, name, coords));
}

}  // namespace psipfl
