#pragma once

#include <memory>

#include "colm/chain.hpp"
#include "colm/ops.hpp"
#include "colm/rng.hpp"

namespace colm {

struct StepBcsrMatrix;

/// Chain-of-Linear layer: y = concat_i(W_i x_{<=i} + b_i). Block i maps
/// the input prefix P^x_i to output chain i, so the weight support is
/// the step-shaped lower staircase. Blocks are stored input-major
/// ([P^x_i, Dy_i]) to feed the row-major GEMM; logical extents follow
/// the (Dy_i x P^x_i) convention.
struct ChainLinear {
  ChainSpec spec;
  ChainDims in_dims, out_dims;
  bool biased = false;
  std::vector<Tensor> w;  // n blocks, block i stored [Px_i, Dy_i]
  std::vector<Tensor> b;  // n blocks [Dy_i] when biased

  enum class Kernel { Naive, Bcsr };
  Kernel kernel = Kernel::Naive;
  std::shared_ptr<StepBcsrMatrix> packed;  // weight snapshot; rebuilt by set_kernel

  static ChainLinear create(const ChainSpec& spec, i64 dx, i64 dy, bool biased, DType dt);

  i64 dx() const { return in_dims.total; }
  i64 dy() const { return out_dims.total; }
  i64 n() const { return spec.n(); }
  DType dtype() const { return w[0].dtype(); }
  i64 param_count() const;

  /// Samples the full dense [Dy, Dx] matrix in row-major order and
  /// keeps the step-supported entries, so an n=1 layer sees exactly
  /// the dense init stream. Biases are zeroed.
  void init_masked_normal(Rng& rng, double stddev);
  /// Same masking, entries uniform in +-1/sqrt(Dx); biases too.
  void init_masked_uniform_fanin(Rng& rng);

  /// y[.., P^y_active]; x may be wider than P^x_active, the extra
  /// columns are never read. Tape-aware.
  Tensor forward(const Tensor& x, i64 active) const;

  /// Materializes the logical dense step-masked matrix [Dy, Dx].
  Tensor dense_weight() const;
  /// Copies a dense [Dy, Dx] matrix into the step-supported blocks;
  /// entries outside the step mask must be zero.
  void load_dense_weight(const Tensor& dense);

  void set_kernel(Kernel k, i64 block_size = 0);

  /// Direct backward used by the tape node (exposed for tests):
  /// accumulates into grad buffers of x / w / b when present.
  void backward_into(const Tensor& x, const Tensor& y, i64 active) const;
};

/// A plain dense linear layer is the n=1 chain layer.
ChainLinear dense_linear(i64 dx, i64 dy, bool biased, DType dt);

}  // namespace colm
