// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string_view>
#include <vector>

// Dense vector kernels behind the model and aggregation inner loops.
//
// Every kernel has a scalar reference implementation; SIMD variants (AVX2 on
// x86-64, NEON on AArch64) are compiled when the target supports them and
// selected once at startup from the CPU's reported features. Setting
// PSIPFL_KERNELS=scalar|avx2|neon in the environment forces a backend.
//
// Elementwise kernels (axpy, scale, fused_weighted_sum) are bit-identical
// across backends. Reductions (dot, squared_distance) reassociate and agree
// with the scalar reference to a few ulps of the magnitude of the summands.

namespace psipfl::kernels {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend b) noexcept;

struct Table {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
};

/// Backends compiled in and supported by the running CPU; scalar is first.
std::vector<Backend> available_backends();

/// Table for a specific backend. Throws ParameterError if unavailable.
const Table& table_for(Backend b);

/// Table selected for this process.
const Table& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}

namespace detail {
extern const Table kScalar;
#if defined(PSIPFL_HAVE_AVX2)
extern const Table kAvx2;
#endif
#if defined(PSIPFL_HAVE_NEON)
extern const Table kNeon;
#endif
}  // namespace detail

}  // namespace psipfl::kernels
