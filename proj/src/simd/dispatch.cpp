// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string_view>

#include "asp/error.hpp"
#include "asp/simd.hpp"

namespace asp::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  static const bool has = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return has;
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("ASP_SIMD"); env && std::string_view(env) == "scalar") return Isa::Scalar;
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
      return detail::avx2_kernels() != nullptr && cpu_has_avx2();
  }
  return false;
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

const Kernels& kernels_for(Isa isa) {
  if (!isa_supported(isa)) throw ValidationError(std::string("simd: ISA not supported: ") + isa_name(isa));
  return isa == Isa::Avx2 ? *detail::avx2_kernels() : detail::scalar_kernels();
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  kernels_for(isa);
  current().store(isa, std::memory_order_relaxed);
}

const Kernels& active() { return kernels_for(active_isa()); }

}  // namespace asp::simd
