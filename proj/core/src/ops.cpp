#include "colm/ops.hpp"

#include <cmath>
#include <cstring>

#include "colm/gemm.hpp"
#include "colm/parallel.hpp"

namespace colm {

namespace {

bool g_finite_checks = false;

template <typename T>
void add_into(T* dst, const T* src, i64 n) {
  for (i64 i = 0; i < n; ++i) dst[i] += src[i];
}

std::vector<i64> matmul_shape(const Tensor& a, const Tensor& b) {
  std::vector<i64> s = a.shape();
  s.back() = b.size(1);
  return s;
}

}  // namespace

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks() { return g_finite_checks; }

void detail::check_finite_out(const Tensor& t, const char* op) {
  if (g_finite_checks && !t.all_finite()) {
    throw Error(Err::Nan, std::string(op) + ": non-finite value in output");
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  COLM_CHECK(a.rank() >= 2 && b.rank() == 2, Shape,
             "matmul: need [..,M,K] x [K,N], got " << a.shape() << " x " << b.shape());
  COLM_CHECK(a.size(a.rank() - 1) == b.size(0), Shape,
             "matmul: inner extents differ: " << a.shape() << " x " << b.shape());
  COLM_CHECK(a.dtype() == b.dtype(), DType, "matmul: dtype mismatch");
  const i64 k = b.size(0), n = b.size(1);
  const i64 m = a.numel() / k;
  Tensor y = Tensor::empty(matmul_shape(a, b), a.dtype());
  if (a.dtype() == DType::F32) {
    gemm::nn(a.data<float>(), k, b.data<float>(), n, y.data<float>(), n, m, n, k, false);
  } else {
    gemm::nn(a.data<double>(), k, b.data<double>(), n, y.data<double>(), n, m, n, k, false);
  }
  detail::check_finite_out(y, "matmul");
  if (recording({&a, &b})) {
    y.set_requires_grad(true);
    Tape::current()->record([a, b, y, m, n, k]() mutable {
      if (!y.has_grad()) return;
      if (y.dtype() == DType::F32) {
        const float* gy = y.grad_data<float>();
        if (a.requires_grad())
          gemm::nt(gy, n, b.data<float>(), n, a.grad_data<float>(), k, m, k, n, true);
        if (b.requires_grad())
          gemm::tn(a.data<float>(), k, gy, n, b.grad_data<float>(), n, k, n, m, true);
      } else {
        const double* gy = y.grad_data<double>();
        if (a.requires_grad())
          gemm::nt(gy, n, b.data<double>(), n, a.grad_data<double>(), k, m, k, n, true);
        if (b.requires_grad())
          gemm::tn(a.data<double>(), k, gy, n, b.grad_data<double>(), n, k, n, m, true);
      }
    });
  }
  return y;
}

namespace {

template <typename T>
void add_kernel(const T* a, const T* b, T* y, i64 rows, i64 cols, bool bias_broadcast) {
  if (bias_broadcast) {
    for (i64 r = 0; r < rows; ++r) {
      const T* ar = a + r * cols;
      T* yr = y + r * cols;
      for (i64 c = 0; c < cols; ++c) yr[c] = ar[c] + b[c];
    }
  } else {
    for (i64 i = 0; i < rows * cols; ++i) y[i] = a[i] + b[i];
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  COLM_CHECK(a.dtype() == b.dtype(), DType, "add: dtype mismatch");
  const bool bias = b.rank() == 1 && a.shape() != b.shape();
  if (bias) {
    COLM_CHECK(a.size(a.rank() - 1) == b.size(0), Shape,
               "add: incompatible shapes " << a.shape() << " + " << b.shape());
  } else {
    COLM_CHECK(a.shape() == b.shape(), Shape,
               "add: incompatible shapes " << a.shape() << " + " << b.shape());
  }
  const i64 cols = a.size(a.rank() - 1);
  const i64 rows = a.numel() / cols;
  Tensor y = Tensor::empty(a.shape(), a.dtype());
  if (a.dtype() == DType::F32) {
    add_kernel(a.data<float>(), b.data<float>(), y.data<float>(), rows, cols, bias);
  } else {
    add_kernel(a.data<double>(), b.data<double>(), y.data<double>(), rows, cols, bias);
  }
  detail::check_finite_out(y, "add");
  if (recording({&a, &b})) {
    y.set_requires_grad(true);
    Tape::current()->record([a, b, y, rows, cols, bias]() mutable {
      if (!y.has_grad()) return;
      auto run = [&](auto type_tag) {
        using T = decltype(type_tag);
        const T* gy = y.grad_data<T>();
        if (a.requires_grad()) add_into(a.grad_data<T>(), gy, rows * cols);
        if (b.requires_grad()) {
          T* gb = b.grad_data<T>();
          if (bias) {
            for (i64 r = 0; r < rows; ++r) add_into(gb, gy + r * cols, cols);
          } else {
            add_into(gb, gy, rows * cols);
          }
        }
      };
      y.dtype() == DType::F32 ? run(float{}) : run(double{});
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  COLM_CHECK(a.dtype() == b.dtype(), DType, "mul: dtype mismatch");
  COLM_CHECK(a.shape() == b.shape(), Shape,
             "mul: incompatible shapes " << a.shape() << " * " << b.shape());
  Tensor y = Tensor::empty(a.shape(), a.dtype());
  const i64 n = a.numel();
  if (a.dtype() == DType::F32) {
    const float *pa = a.data<float>(), *pb = b.data<float>();
    float* py = y.data<float>();
    for (i64 i = 0; i < n; ++i) py[i] = pa[i] * pb[i];
  } else {
    const double *pa = a.data<double>(), *pb = b.data<double>();
    double* py = y.data<double>();
    for (i64 i = 0; i < n; ++i) py[i] = pa[i] * pb[i];
  }
  detail::check_finite_out(y, "mul");
  if (recording({&a, &b})) {
    y.set_requires_grad(true);
    Tape::current()->record([a, b, y, n]() mutable {
      if (!y.has_grad()) return;
      auto run = [&](auto type_tag) {
        using T = decltype(type_tag);
        const T* gy = y.grad_data<T>();
        if (a.requires_grad()) {
          T* ga = a.grad_data<T>();
          const T* pb = b.data<T>();
          for (i64 i = 0; i < n; ++i) ga[i] += gy[i] * pb[i];
        }
        if (b.requires_grad()) {
          T* gb = b.grad_data<T>();
          const T* pa = a.data<T>();
          for (i64 i = 0; i < n; ++i) gb[i] += gy[i] * pa[i];
        }
      };
      y.dtype() == DType::F32 ? run(float{}) : run(double{});
    });
  }
  return y;
}

Tensor scale(const Tensor& a, double s) {
  Tensor y = Tensor::empty(a.shape(), a.dtype());
  const i64 n = a.numel();
  if (a.dtype() == DType::F32) {
    const float* pa = a.data<float>();
    float* py = y.data<float>();
    const float fs = static_cast<float>(s);
    for (i64 i = 0; i < n; ++i) py[i] = pa[i] * fs;
  } else {
    const double* pa = a.data<double>();
    double* py = y.data<double>();
    for (i64 i = 0; i < n; ++i) py[i] = pa[i] * s;
  }
  if (recording({&a})) {
    y.set_requires_grad(true);
    Tape::current()->record([a, y, s, n]() mutable {
      if (!y.has_grad() || !a.requires_grad()) return;
      if (y.dtype() == DType::F32) {
        const float* gy = y.grad_data<float>();
        float* ga = a.grad_data<float>();
        const float fs = static_cast<float>(s);
        for (i64 i = 0; i < n; ++i) ga[i] += gy[i] * fs;
      } else {
        const double* gy = y.grad_data<double>();
        double* ga = a.grad_data<double>();
        for (i64 i = 0; i < n; ++i) ga[i] += gy[i] * s;
      }
    });
  }
  return y;
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

template <typename T>
void unary_forward(const Tensor& x, Tensor& y, int kind) {
  const T* px = x.data<T>();
  T* py = y.data<T>();
  const i64 n = x.numel();
  switch (kind) {
    case 0:  // gelu
      for (i64 i = 0; i < n; ++i) {
        double v = static_cast<double>(px[i]);
        py[i] = static_cast<T>(0.5 * v * (1.0 + std::erf(v * kInvSqrt2)));
      }
      break;
    case 1:  // silu
      for (i64 i = 0; i < n; ++i) {
        double v = static_cast<double>(px[i]);
        py[i] = static_cast<T>(v / (1.0 + std::exp(-v)));
      }
      break;
    default:  // relu
      for (i64 i = 0; i < n; ++i) py[i] = px[i] > T(0) ? px[i] : T(0);
  }
}

template <typename T>
void unary_backward(const Tensor& x, const Tensor& y, int kind) {
  const T* px = x.data<T>();
  const T* gy = y.grad_data<T>();
  T* gx = const_cast<Tensor&>(x).grad_data<T>();
  const i64 n = x.numel();
  switch (kind) {
    case 0:
      for (i64 i = 0; i < n; ++i) {
        double v = static_cast<double>(px[i]);
        double phi = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        double Phi = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        gx[i] += gy[i] * static_cast<T>(Phi + v * phi);
      }
      break;
    case 1:
      for (i64 i = 0; i < n; ++i) {
        double v = static_cast<double>(px[i]);
        double sg = 1.0 / (1.0 + std::exp(-v));
        gx[i] += gy[i] * static_cast<T>(sg * (1.0 + v * (1.0 - sg)));
      }
      break;
    default:
      for (i64 i = 0; i < n; ++i) {
        if (px[i] > T(0)) gx[i] += gy[i];
      }
  }
}

Tensor unary_op(const Tensor& x, int kind, const char* name) {
  Tensor y = Tensor::empty(x.shape(), x.dtype());
  if (x.dtype() == DType::F32) {
    unary_forward<float>(x, y, kind);
  } else {
    unary_forward<double>(x, y, kind);
  }
  detail::check_finite_out(y, name);
  if (recording({&x})) {
    y.set_requires_grad(true);
    Tape::current()->record([x, y, kind]() mutable {
      if (!y.has_grad() || !x.requires_grad()) return;
      if (x.dtype() == DType::F32) {
        unary_backward<float>(x, y, kind);
      } else {
        unary_backward<double>(x, y, kind);
      }
    });
  }
  return y;
}

}  // namespace

Tensor gelu(const Tensor& x) { return unary_op(x, 0, "gelu"); }
Tensor silu(const Tensor& x) { return unary_op(x, 1, "silu"); }
Tensor relu(const Tensor& x) { return unary_op(x, 2, "relu"); }

namespace {

template <typename T>
void softmax_forward(const T* x, T* y, i64 rows, i64 cols) {
  for (i64 r = 0; r < rows; ++r) {
    const T* xr = x + r * cols;
    T* yr = y + r * cols;
    double m = static_cast<double>(xr[0]);
    for (i64 c = 1; c < cols; ++c) m = std::max(m, static_cast<double>(xr[c]));
    double denom = 0.0;
    for (i64 c = 0; c < cols; ++c) denom += std::exp(static_cast<double>(xr[c]) - m);
    const double inv = 1.0 / denom;
    for (i64 c = 0; c < cols; ++c) {
      yr[c] = static_cast<T>(std::exp(static_cast<double>(xr[c]) - m) * inv);
    }
  }
}

template <typename T>
void softmax_backward(const Tensor& x, const Tensor& y, i64 rows, i64 cols) {
  const T* py = y.data<T>();
  const T* gy = y.grad_data<T>();
  T* gx = const_cast<Tensor&>(x).grad_data<T>();
  for (i64 r = 0; r < rows; ++r) {
    const T* yr = py + r * cols;
    const T* gr = gy + r * cols;
    T* xr = gx + r * cols;
    double dot = 0.0;
    for (i64 c = 0; c < cols; ++c) dot += static_cast<double>(yr[c]) * static_cast<double>(gr[c]);
    for (i64 c = 0; c < cols; ++c) {
      xr[c] += static_cast<T>(static_cast<double>(yr[c]) * (static_cast<double>(gr[c]) - dot));
    }
  }
}

}  // namespace

Tensor softmax_rows(const Tensor& x) {
  COLM_CHECK(x.rank() >= 1 && x.size(x.rank() - 1) >= 1, Shape, "softmax_rows: empty rows");
  const i64 cols = x.size(x.rank() - 1);
  const i64 rows = x.numel() / cols;
  Tensor y = Tensor::empty(x.shape(), x.dtype());
  if (x.dtype() == DType::F32) {
    softmax_forward(x.data<float>(), y.data<float>(), rows, cols);
  } else {
    softmax_forward(x.data<double>(), y.data<double>(), rows, cols);
  }
  detail::check_finite_out(y, "softmax_rows");
  if (recording({&x})) {
    y.set_requires_grad(true);
    Tape::current()->record([x, y, rows, cols]() mutable {
      if (!y.has_grad() || !x.requires_grad()) return;
      if (x.dtype() == DType::F32) {
        softmax_backward<float>(x, y, rows, cols);
      } else {
        softmax_backward<double>(x, y, rows, cols);
      }
    });
  }
  return y;
}

namespace {

Tensor reduce_op(const Tensor& x, bool take_mean) {
  double acc = 0.0;
  const i64 n = x.numel();
  if (x.dtype() == DType::F32) {
    const float* p = x.data<float>();
    for (i64 i = 0; i < n; ++i) acc += static_cast<double>(p[i]);
  } else {
    const double* p = x.data<double>();
    for (i64 i = 0; i < n; ++i) acc += p[i];
  }
  if (take_mean) acc /= static_cast<double>(n);
  Tensor y = Tensor::scalar(acc, x.dtype());
  if (recording({&x})) {
    y.set_requires_grad(true);
    const double w = take_mean ? 1.0 / static_cast<double>(n) : 1.0;
    Tape::current()->record([x, y, n, w]() mutable {
      if (!y.has_grad() || !x.requires_grad()) return;
      if (x.dtype() == DType::F32) {
        const float g = y.grad_data<float>()[0] * static_cast<float>(w);
        float* gx = x.grad_data<float>();
        for (i64 i = 0; i < n; ++i) gx[i] += g;
      } else {
        const double g = y.grad_data<double>()[0] * w;
        double* gx = x.grad_data<double>();
        for (i64 i = 0; i < n; ++i) gx[i] += g;
      }
    });
  }
  return y;
}

}  // namespace

Tensor sum(const Tensor& x) { return reduce_op(x, false); }
Tensor mean(const Tensor& x) { return reduce_op(x, true); }

Tensor slice_cols(const Tensor& x, i64 c0, i64 c1) {
  const i64 cols = x.size(x.rank() - 1);
  COLM_CHECK(0 <= c0 && c0 < c1 && c1 <= cols, Range,
             "slice_cols: [" << c0 << "," << c1 << ") out of width " << cols);
  const i64 rows = x.numel() / cols;
  const i64 w = c1 - c0;
  std::vector<i64> shape = x.shape();
  shape.back() = w;
  Tensor y = Tensor::empty(std::move(shape), x.dtype());
  const std::size_t esz = dtype_size(x.dtype());
  const std::byte* src = static_cast<const std::byte*>(x.raw());
  std::byte* dst = static_cast<std::byte*>(y.raw());
  for (i64 r = 0; r < rows; ++r) {
    std::memcpy(dst + static_cast<std::size_t>(r * w) * esz,
                src + static_cast<std::size_t>(r * cols + c0) * esz,
                static_cast<std::size_t>(w) * esz);
  }
  if (recording({&x})) {
    y.set_requires_grad(true);
    Tape::current()->record([x, y, rows, cols, c0, w]() mutable {
      if (!y.has_grad() || !x.requires_grad()) return;
      auto run = [&](auto type_tag) {
        using T = decltype(type_tag);
        const T* gy = y.grad_data<T>();
        T* gx = x.grad_data<T>();
        for (i64 r = 0; r < rows; ++r) {
          add_into(gx + r * cols + c0, gy + r * w, w);
        }
      };
      x.dtype() == DType::F32 ? run(float{}) : run(double{});
    });
  }
  return y;
}

}  // namespace colm
