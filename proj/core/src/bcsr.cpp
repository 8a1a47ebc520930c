#include "colm/bcsr.hpp"

#include <algorithm>
#include <cstring>

#include "colm/chain_linear.hpp"
#include "colm/gemm.hpp"
#include "colm/parallel.hpp"

namespace colm {

bool StepMask::present(i64 r, i64 c) const {
  const i64 chain = out_dims.chain_of(r * block_size);
  const i64 px = in_dims.prefix[static_cast<std::size_t>(chain)];
  return c * block_size < px;
}

i64 StepMask::count() const {
  i64 k = 0;
  for (i64 r = 0; r < rows; ++r) {
    for (i64 c = 0; c < cols; ++c) {
      if (present(r, c)) ++k;
    }
  }
  return k;
}

StepMask mask_blocks(const ChainSpec& spec, i64 dx, i64 dy, i64 block_size) {
  COLM_CHECK(block_size >= 1, Config, "block size must be positive");
  StepMask m;
  m.block_size = block_size;
  m.spec = spec;
  m.in_dims = chain_dims(spec, dx);
  m.out_dims = chain_dims(spec, dy);
  for (i64 w : m.in_dims.widths) {
    COLM_CHECK(w % block_size == 0, Config,
               "block size " << block_size << " does not divide input chain width " << w);
  }
  for (i64 w : m.out_dims.widths) {
    COLM_CHECK(w % block_size == 0, Config,
               "block size " << block_size << " does not divide output chain width " << w);
  }
  m.rows = dy / block_size;
  m.cols = dx / block_size;
  return m;
}

i64 choose_block_size(const ChainSpec& spec, i64 dx, i64 dy) {
  ChainDims in = chain_dims(spec, dx);
  ChainDims out = chain_dims(spec, dy);
  i64 g = 0;
  for (i64 w : in.widths) g = std::__gcd(g, w);
  for (i64 w : out.widths) g = std::__gcd(g, w);
  i64 bs = 1;
  while (bs * 2 <= 64 && g % (bs * 2) == 0) bs *= 2;
  return bs;
}

namespace {

template <typename T>
void pack_blocks(const ChainLinear& p, StepBcsrMatrix& m) {
  const i64 bs = m.block_size();
  T* dst = m.blocks.data<T>();
  for (i64 id = 0; id < m.nblocks(); ++id) {
    // Recover (r, c) for block id.
    i64 r = static_cast<i64>(std::upper_bound(m.row_ptr.begin(), m.row_ptr.end(), id) -
                             m.row_ptr.begin()) - 1;
    i64 c = m.col_idx[static_cast<std::size_t>(id)];
    const i64 chain = m.mask.out_dims.chain_of(r * bs);
    const Tensor& wblk = p.w[static_cast<std::size_t>(chain)];
    const T* src = wblk.data<T>();
    const i64 dy_i = p.out_dims.widths[static_cast<std::size_t>(chain)];
    const i64 local_out = r * bs - (chain == 0 ? 0 : p.out_dims.prefix[static_cast<std::size_t>(chain - 1)]);
    // Block storage is input-major [bs_in, bs_out], matching w's layout.
    for (i64 ki = 0; ki < bs; ++ki) {
      const T* wrow = src + (c * bs + ki) * dy_i + local_out;
      std::memcpy(dst + (id * bs + ki) * bs, wrow, static_cast<std::size_t>(bs) * sizeof(T));
    }
  }
}

}  // namespace

StepBcsrMatrix pack(const ChainLinear& params, i64 block_size) {
  StepBcsrMatrix m;
  m.dy = params.dy();
  m.dx = params.dx();
  m.mask = mask_blocks(params.spec, m.dx, m.dy, block_size);
  m.row_ptr.assign(1, 0);
  for (i64 r = 0; r < m.mask.rows; ++r) {
    for (i64 c = 0; c < m.mask.cols; ++c) {
      if (m.mask.present(r, c)) m.col_idx.push_back(c);
    }
    m.row_ptr.push_back(static_cast<i64>(m.col_idx.size()));
  }
  const i64 bs = block_size;
  m.blocks = Tensor::zeros({static_cast<i64>(m.col_idx.size()), bs, bs}, params.dtype());
  if (params.dtype() == DType::F32) {
    pack_blocks<float>(params, m);
  } else {
    pack_blocks<double>(params, m);
  }
  // Column-grouped index, rows ascending within a column.
  m.col_ptr.assign(static_cast<std::size_t>(m.mask.cols) + 1, 0);
  for (i64 id = 0; id < m.nblocks(); ++id) {
    ++m.col_ptr[static_cast<std::size_t>(m.col_idx[static_cast<std::size_t>(id)]) + 1];
  }
  for (std::size_t c = 1; c < m.col_ptr.size(); ++c) m.col_ptr[c] += m.col_ptr[c - 1];
  m.row_idx.resize(static_cast<std::size_t>(m.nblocks()));
  m.col_block_id.resize(static_cast<std::size_t>(m.nblocks()));
  std::vector<i64> fill(m.col_ptr.begin(), m.col_ptr.end() - 1);
  for (i64 r = 0; r < m.mask.rows; ++r) {
    for (i64 id = m.row_ptr[static_cast<std::size_t>(r)]; id < m.row_ptr[static_cast<std::size_t>(r) + 1]; ++id) {
      const i64 c = m.col_idx[static_cast<std::size_t>(id)];
      const i64 slot = fill[static_cast<std::size_t>(c)]++;
      m.row_idx[static_cast<std::size_t>(slot)] = r;
      m.col_block_id[static_cast<std::size_t>(slot)] = id;
    }
  }
  return m;
}

Tensor unpack(const StepBcsrMatrix& m) {
  Tensor dense = Tensor::zeros({m.dy, m.dx}, m.blocks.dtype());
  const i64 bs = m.block_size();
  auto run = [&](auto tag) {
    using T = decltype(tag);
    T* d = dense.data<T>();
    const T* blk = m.blocks.data<T>();
    for (i64 r = 0; r < m.mask.rows; ++r) {
      for (i64 id = m.row_ptr[static_cast<std::size_t>(r)]; id < m.row_ptr[static_cast<std::size_t>(r) + 1]; ++id) {
        const i64 c = m.col_idx[static_cast<std::size_t>(id)];
        // dense is output-major [Dy, Dx]; block storage is input-major.
        for (i64 ki = 0; ki < bs; ++ki) {
          for (i64 o = 0; o < bs; ++o) {
            d[(r * bs + o) * m.dx + c * bs + ki] = blk[(id * bs + ki) * bs + o];
          }
        }
      }
    }
  };
  m.blocks.dtype() == DType::F32 ? run(float{}) : run(double{});
  return dense;
}

namespace bcsr_detail {

template <typename T>
void forward_raw(const T* x, i64 ldx, const StepBcsrMatrix& m, i64 active, T* y, i64 ldy,
                 i64 rows) {
  const i64 bs = m.block_size();
  const i64 py = m.mask.out_dims.prefix_width(active);
  const i64 brows = py / bs;
  const T* blk = m.blocks.data<T>();
  // One task per (output block-row, row group); accumulation over the
  // blocks of a row stays sequential inside the task.
  const i64 row_group = 256;
  const i64 mg = (rows + row_group - 1) / row_group;
  ThreadPool::instance().run(brows * mg, [&](i64 task) {
    const i64 br = task / mg;
    const i64 m0 = (task % mg) * row_group;
    const i64 m1 = std::min(rows, m0 + row_group);
    const i64 lo = m.row_ptr[static_cast<std::size_t>(br)];
    const i64 hi = m.row_ptr[static_cast<std::size_t>(br) + 1];
    for (i64 id = lo; id < hi; ++id) {
      const i64 c = m.col_idx[static_cast<std::size_t>(id)];
      gemm::nn(x + m0 * ldx + c * bs, ldx, blk + id * bs * bs, bs, y + m0 * ldy + br * bs, ldy,
               m1 - m0, bs, bs, /*accumulate=*/id != lo);
    }
  });
}

template <typename T>
void backward_input_raw(const T* gy, i64 ldgy, const StepBcsrMatrix& m, i64 active, T* gx,
                        i64 ldgx, i64 rows, bool accumulate) {
  const i64 bs = m.block_size();
  const i64 py = m.mask.out_dims.prefix_width(active);
  const i64 px = m.mask.in_dims.prefix_width(active);
  const i64 blimit = py / bs;
  const i64 bcols = px / bs;
  const T* blk = m.blocks.data<T>();
  const i64 row_group = 256;
  const i64 mg = (rows + row_group - 1) / row_group;
  ThreadPool::instance().run(bcols * mg, [&](i64 task) {
    const i64 bc = task / mg;
    const i64 m0 = (task % mg) * row_group;
    const i64 m1 = std::min(rows, m0 + row_group);
    const i64 lo = m.col_ptr[static_cast<std::size_t>(bc)];
    const i64 hi = m.col_ptr[static_cast<std::size_t>(bc) + 1];
    bool first = true;
    for (i64 s = lo; s < hi; ++s) {
      const i64 br = m.row_idx[static_cast<std::size_t>(s)];
      if (br >= blimit) break;  // rows ascending; rest are beyond active
      const i64 id = m.col_block_id[static_cast<std::size_t>(s)];
      // grad_x[:, bc] += gy[:, br] * block^T; block is input-major so
      // this is the nt orientation.
      gemm::nt(gy + m0 * ldgy + br * bs, ldgy, blk + id * bs * bs, bs,
               gx + m0 * ldgx + bc * bs, ldgx, m1 - m0, bs, bs, accumulate || !first);
      first = false;
    }
    if (first && !accumulate) {
      for (i64 r = m0; r < m1; ++r) {
        std::memset(gx + r * ldgx + bc * bs, 0, static_cast<std::size_t>(bs) * sizeof(T));
      }
    }
  });
}

template <typename T>
void backward_weight_raw(const T* x, i64 ldx, const T* gy, i64 ldgy, const StepBcsrMatrix& m,
                         i64 active, T* blocks, i64 rows, bool accumulate) {
  const i64 bs = m.block_size();
  const i64 py = m.mask.out_dims.prefix_width(active);
  const i64 blimit = py / bs;
  const i64 nb = m.row_ptr[static_cast<std::size_t>(blimit)];
  // One task per present block; each task owns its output block.
  ThreadPool::instance().run(nb, [&](i64 id) {
    i64 r = static_cast<i64>(std::upper_bound(m.row_ptr.begin(), m.row_ptr.end(), id) -
                             m.row_ptr.begin()) - 1;
    const i64 c = m.col_idx[static_cast<std::size_t>(id)];
    gemm::tn(x + c * bs, ldx, gy + r * bs, ldgy, blocks + id * bs * bs, bs, bs, bs, rows,
             accumulate);
  });
}

template void forward_raw<float>(const float*, i64, const StepBcsrMatrix&, i64, float*, i64, i64);
template void forward_raw<double>(const double*, i64, const StepBcsrMatrix&, i64, double*, i64, i64);
template void backward_input_raw<float>(const float*, i64, const StepBcsrMatrix&, i64, float*, i64, i64, bool);
template void backward_input_raw<double>(const double*, i64, const StepBcsrMatrix&, i64, double*, i64, i64, bool);
template void backward_weight_raw<float>(const float*, i64, const float*, i64, const StepBcsrMatrix&, i64, float*, i64, bool);
template void backward_weight_raw<double>(const double*, i64, const double*, i64, const StepBcsrMatrix&, i64, double*, i64, bool);

}  // namespace bcsr_detail

Tensor bcsr_forward(const Tensor& x, const StepBcsrMatrix& m, i64 active) {
  const i64 width = x.size(x.rank() - 1);
  const i64 px = m.mask.in_dims.prefix_width(active);
  COLM_CHECK(width >= px, Shape,
             "bcsr_forward: input width " << width << " < required prefix " << px);
  const i64 rows = x.numel() / width;
  const i64 py = m.mask.out_dims.prefix_width(active);
  std::vector<i64> shape = x.shape();
  shape.back() = py;
  Tensor y = Tensor::empty(std::move(shape), x.dtype());
  if (x.dtype() == DType::F32) {
    bcsr_detail::forward_raw<float>(x.data<float>(), width, m, active, y.data<float>(), py, rows);
  } else {
    bcsr_detail::forward_raw<double>(x.data<double>(), width, m, active, y.data<double>(), py,
                                     rows);
  }
  return y;
}

Tensor bcsr_backward_input(const Tensor& grad_y, const StepBcsrMatrix& m, i64 active) {
  const i64 width = grad_y.size(grad_y.rank() - 1);
  const i64 py = m.mask.out_dims.prefix_width(active);
  COLM_CHECK(width == py, Shape,
             "bcsr_backward_input: grad width " << width << " != prefix " << py);
  const i64 rows = grad_y.numel() / width;
  const i64 px = m.mask.in_dims.prefix_width(active);
  std::vector<i64> shape = grad_y.shape();
  shape.back() = px;
  Tensor gx = Tensor::empty(std::move(shape), grad_y.dtype());
  if (grad_y.dtype() == DType::F32) {
    bcsr_detail::backward_input_raw<float>(grad_y.data<float>(), width, m, active,
                                           gx.data<float>(), px, rows, false);
  } else {
    bcsr_detail::backward_input_raw<double>(grad_y.data<double>(), width, m, active,
                                            gx.data<double>(), px, rows, false);
  }
  return gx;
}

Tensor bcsr_backward_weight(const Tensor& x, const Tensor& grad_y, const StepBcsrMatrix& m,
                            i64 active) {
  const i64 xw = x.size(x.rank() - 1);
  const i64 gw = grad_y.size(grad_y.rank() - 1);
  const i64 py = m.mask.out_dims.prefix_width(active);
  COLM_CHECK(gw == py, Shape, "bcsr_backward_weight: grad width " << gw << " != prefix " << py);
  COLM_CHECK(xw >= m.mask.in_dims.prefix_width(active), Shape,
             "bcsr_backward_weight: input width " << xw << " too narrow");
  const i64 rows = grad_y.numel() / gw;
  COLM_CHECK(x.numel() / xw == rows, Shape, "bcsr_backward_weight: row count mismatch");
  const i64 bs = m.block_size();
  Tensor blocks = Tensor::zeros({m.nblocks(), bs, bs}, x.dtype());
  if (x.dtype() == DType::F32) {
    bcsr_detail::backward_weight_raw<float>(x.data<float>(), xw, grad_y.data<float>(), gw, m,
                                            active, blocks.data<float>(), rows, false);
  } else {
    bcsr_detail::backward_weight_raw<double>(x.data<double>(), xw, grad_y.data<double>(), gw, m,
                                             active, blocks.data<double>(), rows, false);
  }
  return blocks;
}

}  // namespace colm
