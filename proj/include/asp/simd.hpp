// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense kernels behind the substrate's matmul and the attention paths. Each
// kernel has a scalar reference and, on x86-64, an AVX2+FMA variant picked at
// runtime. Set ASP_SIMD=scalar in the environment to force the reference path.

#include <cstddef>

namespace asp::simd {

enum class Isa { Scalar, Avx2 };

struct Kernels {
  // c[m x n] (+)= a[m x k] * b[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
                  bool accumulate);
  // c[m x n] (+)= a[m x k] * b[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
                  bool accumulate);
  // c[m x n] (+)= a[k x m]^T * b[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
                  bool accumulate);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

bool isa_supported(Isa isa);
const char* isa_name(Isa isa);

/// Kernel table for a specific ISA. Throws if the ISA is not supported.
const Kernels& kernels_for(Isa isa);

/// ISA selected for this process (detected once, overridable).
Isa active_isa();
void force_isa(Isa isa);
const Kernels& active();

namespace detail {
const Kernels& scalar_kernels();
const Kernels* avx2_kernels();  // nullptr when not compiled in
}  // namespace detail

}  // namespace asp::simd
