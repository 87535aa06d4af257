// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string>

#include "psipfl/error.hpp"
#include "psipfl/kernels.hpp"

namespace psipfl::kernels {
namespace {

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(PSIPFL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(PSIPFL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Table* compiled_table(Backend b) {
  switch (b) {
    case Backend::scalar:
      return &detail::kScalar;
    case Backend::avx2:
#if defined(PSIPFL_HAVE_AVX2)
      return &detail::kAvx2;
#else
      return nullptr;
#endif
    case Backend::neon:
#if defined(PSIPFL_HAVE_NEON)
      return &detail::kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const Table& select() {
  if (const char* forced = std::getenv("PSIPFL_KERNELS")) {
    const std::string want(forced);
    for (Backend b : available_backends())
      if (backend_name(b) == want) return table_for(b);
    throw ParameterError("PSIPFL_KERNELS=" + want + " is not available on this machine");
  }
  // Widest supported backend wins.
  return table_for(available_backends().back());
}

}  // namespace

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon})
    if (compiled_table(b) != nullptr && cpu_supports(b)) out.push_back(b);
  return out;
}

const Table& table_for(Backend b) {
  const Table* t = compiled_table(b);
  if (t == nullptr || !cpu_supports(b))
    throw ParameterError("kernel backend " + std::string(backend_name(b)) + " unavailable");
  return *t;
}

const Table& active() {
  static const Table& chosen = select();
  return chosen;
}

}  // namespace psipfl::kernels
