#include "colm/tensor.hpp"

#include <cmath>

namespace colm {

DType dtype_from_name(const std::string& s) {
  if (s == "f32" || s == "float32") return DType::F32;
  if (s == "f64" || s == "float64") return DType::F64;
  throw Error(Err::Config, "unknown dtype '" + s + "' (expected float32 or float64)");
}

namespace {

i64 shape_numel(const std::vector<i64>& shape) {
  i64 n = 1;
  for (i64 d : shape) {
    COLM_CHECK(d > 0, Shape, "extents must be positive, got " << shape);
    n *= d;
  }
  return n;
}

}  // namespace

Tensor Tensor::empty(std::vector<i64> shape, DType dt, bool requires_grad) {
  Tensor t;
  t.p_ = std::make_shared<Impl>();
  t.p_->numel = shape_numel(shape);
  t.p_->shape = std::move(shape);
  t.p_->dt = dt;
  t.p_->requires_grad = requires_grad;
  t.p_->data = std::make_unique<std::byte[]>(static_cast<std::size_t>(t.p_->numel) * dtype_size(dt));
  return t;
}

Tensor Tensor::zeros(std::vector<i64> shape, DType dt, bool requires_grad) {
  Tensor t = empty(std::move(shape), dt, requires_grad);
  std::memset(t.raw(), 0, t.nbytes());
  return t;
}

Tensor Tensor::full(std::vector<i64> shape, DType dt, double value) {
  Tensor t = empty(std::move(shape), dt);
  if (dt == DType::F32) {
    float v = static_cast<float>(value);
    float* p = t.data<float>();
    for (i64 i = 0; i < t.numel(); ++i) p[i] = v;
  } else {
    double* p = t.data<double>();
    for (i64 i = 0; i < t.numel(); ++i) p[i] = value;
  }
  return t;
}

Tensor Tensor::scalar(double value, DType dt) { return full({1}, dt, value); }

void Tensor::ensure_grad() {
  COLM_CHECK(p_, Internal, "undefined tensor");
  if (!p_->grad) {
    std::size_t n = static_cast<std::size_t>(p_->numel) * dtype_size(p_->dt);
    p_->grad = std::make_unique<std::byte[]>(n);
    std::memset(p_->grad.get(), 0, n);
  }
}

void Tensor::zero_grad() {
  if (p_ && p_->grad) {
    std::memset(p_->grad.get(), 0, static_cast<std::size_t>(p_->numel) * dtype_size(p_->dt));
  }
}

Tensor Tensor::clone() const {
  Tensor t = empty(p_->shape, p_->dt, p_->requires_grad);
  std::memcpy(t.raw(), raw(), nbytes());
  return t;
}

Tensor Tensor::to(DType dt) const {
  if (dt == p_->dt) return clone();
  Tensor t = empty(p_->shape, dt);
  if (dt == DType::F64) {
    const float* s = data<float>();
    double* d = t.data<double>();
    for (i64 i = 0; i < numel(); ++i) d[i] = static_cast<double>(s[i]);
  } else {
    const double* s = data<double>();
    float* d = t.data<float>();
    for (i64 i = 0; i < numel(); ++i) d[i] = static_cast<float>(s[i]);
  }
  return t;
}

double Tensor::item() const {
  COLM_CHECK(numel() == 1, Shape, "item() requires a scalar, shape is " << shape());
  return at(0);
}

double Tensor::at(i64 i) const {
  COLM_CHECK(i >= 0 && i < numel(), Range, "index " << i << " out of range " << numel());
  return p_->dt == DType::F32 ? static_cast<double>(data<float>()[i]) : data<double>()[i];
}

bool Tensor::all_finite() const {
  if (p_->dt == DType::F32) {
    const float* p = data<float>();
    for (i64 i = 0; i < numel(); ++i) {
      if (!std::isfinite(p[i])) return false;
    }
  } else {
    const double* p = data<double>();
    for (i64 i = 0; i < numel(); ++i) {
      if (!std::isfinite(p[i])) return false;
    }
  }
  return true;
}

std::ostream& operator<<(std::ostream& os, const std::vector<i64>& shape) {
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  return os << ']';
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype() || a.shape() != b.shape()) return false;
  return std::memcmp(a.raw(), b.raw(), a.nbytes()) == 0;
}

double max_rel_err(const Tensor& a, const Tensor& b) {
  COLM_CHECK(a.numel() == b.numel(), Shape,
             "max_rel_err: numel mismatch " << a.shape() << " vs " << b.shape());
  double worst = 0.0;
  for (i64 i = 0; i < a.numel(); ++i) {
    double x = a.at(i), y = b.at(i);
    double e = std::abs(x - y) / std::max(1.0, std::abs(y));
    if (e > worst) worst = e;
  }
  return worst;
}

double max_abs_err(const Tensor& a, const Tensor& b) {
  COLM_CHECK(a.numel() == b.numel(), Shape,
             "max_abs_err: numel mismatch " << a.shape() << " vs " << b.shape());
  double worst = 0.0;
  for (i64 i = 0; i < a.numel(); ++i) {
    worst = std::max(worst, std::abs(a.at(i) - b.at(i)));
  }
  return worst;
}

}  // namespace colm
