#pragma once

#include "colm/common.hpp"

namespace colm::gemm {

/// Deterministic tiled GEMM kernels. Every output element accumulates
/// its K products in ascending-k order in a private register tile, so
/// results are bit-identical for equal (values, M, N, K) regardless of
/// leading strides, threading, or panel decomposition. Reductions are
/// never split across tasks.
///
/// All matrices are row-major with explicit leading strides.

/// C[M,N] (+)= A[M,K] * B[K,N]
template <typename T>
void nn(const T* a, i64 lda, const T* b, i64 ldb, T* c, i64 ldc, i64 m, i64 n, i64 k,
        bool accumulate);

/// C[M,N] (+)= A^T * B with A stored [K,M]
template <typename T>
void tn(const T* a, i64 lda, const T* b, i64 ldb, T* c, i64 ldc, i64 m, i64 n, i64 k,
        bool accumulate);

/// C[M,N] (+)= A * B^T with B stored [N,K]
template <typename T>
void nt(const T* a, i64 lda, const T* b, i64 ldb, T* c, i64 ldc, i64 m, i64 n, i64 k,
        bool accumulate);

/// Multiply-accumulate flop accounting (2*M*N*K per call), used by the
/// kernel-equivalence and prefill flop-ratio checks.
void reset_flops();
i64 flops();

}  // namespace colm::gemm
