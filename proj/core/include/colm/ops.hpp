#pragma once

#include "colm/tape.hpp"
#include "colm/tensor.hpp"

namespace colm {

/// When enabled, every op validates that finite inputs produced finite
/// outputs and throws E_NAN otherwise. Off by default (training checks
/// the loss per step); the test suites switch it on.
void set_finite_checks(bool on);
bool finite_checks();

/// [.., M, K] x [K, N] -> [.., M, N]. Leading dims of `a` carry over.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Same-shape add, or bias broadcast when b has rank 1 equal to the
/// trailing extent of a.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

Tensor gelu(const Tensor& x);  // exact erf form
Tensor silu(const Tensor& x);
Tensor relu(const Tensor& x);

/// Row-wise softmax over the trailing dimension, max-subtracted,
/// accumulated in double regardless of storage dtype.
Tensor softmax_rows(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Column slice [.., c0:c1) of the trailing dimension (tape-aware).
Tensor slice_cols(const Tensor& x, i64 c0, i64 c1);

namespace detail {
/// Rows when the tensor is viewed as a matrix [rows, trailing].
inline i64 lead_rows(const Tensor& t) { return t.numel() / t.size(t.rank() - 1); }
void check_finite_out(const Tensor& t, const char* op);
}  // namespace detail

}  // namespace colm
