#pragma once

#include "colm/chain.hpp"
#include "colm/tensor.hpp"

namespace colm {

struct ChainLinear;

/// Step-shaped block mask over a (Dy / bs) x (Dx / bs) block grid:
/// block (r, c) is present iff output row-block r belongs to output
/// chain i and input col-block c lies within the input prefix P^x_i.
struct StepMask {
  i64 block_size = 0;
  i64 rows = 0, cols = 0;  // grid extents
  ChainSpec spec;
  ChainDims out_dims, in_dims;

  bool present(i64 r, i64 c) const;
  i64 count() const;
  i64 total() const { return rows * cols; }
};

StepMask mask_blocks(const ChainSpec& spec, i64 dx, i64 dy, i64 block_size);

/// Largest power of two <= 64 dividing every chain width on both axes.
i64 choose_block_size(const ChainSpec& spec, i64 dx, i64 dy);

/// Block-compressed-sparse-row storage of a Chain-of-Linear weight.
/// Stored blocks are exactly the step mask; block data is contiguous in
/// row-major block order (sorted by (r, c)). Within a block, values are
/// input-major [bs_in, bs_out] to feed the GEMM directly.
struct StepBcsrMatrix {
  StepMask mask;
  i64 dy = 0, dx = 0;
  std::vector<i64> row_ptr;  // per block-row offsets into col_idx/blocks
  std::vector<i64> col_idx;  // block column index per stored block
  Tensor blocks;             // [nblocks, bs, bs]

  // Column-grouped view of the same blocks, for the backward-input
  // path ("transposed step mask"): per block-column list of (block row,
  // block id), rows ascending.
  std::vector<i64> col_ptr;
  std::vector<i64> row_idx;
  std::vector<i64> col_block_id;

  i64 nblocks() const { return static_cast<i64>(col_idx.size()); }
  i64 block_size() const { return mask.block_size; }
};

StepBcsrMatrix pack(const ChainLinear& params, i64 block_size);
/// Reproduces the dense step-masked matrix [Dy, Dx] bit-exactly.
Tensor unpack(const StepBcsrMatrix& m);

/// y[M, P^y_active] = x[M, >=P^x_active] masked-multiplied by the
/// stored weight. Bias is applied outside the kernel.
Tensor bcsr_forward(const Tensor& x, const StepBcsrMatrix& m, i64 active);

/// grad_x[M, P^x_active] = grad_y * W over the transposed step mask.
Tensor bcsr_backward_input(const Tensor& grad_y, const StepBcsrMatrix& m, i64 active);

/// Per-block weight gradients [nblocks, bs, bs] (input-major blocks);
/// absent blocks get no storage and no work. Blocks with output chain
/// beyond `active` are left zero.
Tensor bcsr_backward_weight(const Tensor& x, const Tensor& grad_y, const StepBcsrMatrix& m,
                            i64 active);

namespace bcsr_detail {
// Raw strided kernels shared by the public ops and the ChainLinear
// tape node. Row strides may exceed the logical widths.
template <typename T>
void forward_raw(const T* x, i64 ldx, const StepBcsrMatrix& m, i64 active, T* y, i64 ldy,
                 i64 rows);
template <typename T>
void backward_input_raw(const T* gy, i64 ldgy, const StepBcsrMatrix& m, i64 active, T* gx,
                        i64 ldgx, i64 rows, bool accumulate);
template <typename T>
void backward_weight_raw(const T* x, i64 ldx, const T* gy, i64 ldgy, const StepBcsrMatrix& m,
                         i64 active, T* blocks, i64 rows, bool accumulate);
}  // namespace bcsr_detail

}  // namespace colm
