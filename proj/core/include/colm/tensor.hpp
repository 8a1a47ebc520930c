#pragma once

#include <cstring>
#include <memory>
#include <ostream>
#include <vector>

#include "colm/common.hpp"

namespace colm {

enum class DType : std::uint8_t { F32, F64 };

inline std::size_t dtype_size(DType dt) { return dt == DType::F32 ? 4 : 8; }
inline const char* dtype_name(DType dt) { return dt == DType::F32 ? "f32" : "f64"; }
DType dtype_from_name(const std::string& s);

/// Dense row-major n-d array. Value-semantic handle over shared storage;
/// data is treated as immutable after an op produces it, gradients are
/// the only in-place mutated buffers.
class Tensor {
 public:
  Tensor() = default;

  static Tensor empty(std::vector<i64> shape, DType dt, bool requires_grad = false);
  static Tensor zeros(std::vector<i64> shape, DType dt, bool requires_grad = false);
  static Tensor full(std::vector<i64> shape, DType dt, double value);
  static Tensor scalar(double value, DType dt);

  bool defined() const { return static_cast<bool>(p_); }
  const std::vector<i64>& shape() const { return p_->shape; }
  i64 rank() const { return static_cast<i64>(p_->shape.size()); }
  i64 size(i64 d) const { return p_->shape[static_cast<std::size_t>(d)]; }
  i64 numel() const { return p_->numel; }
  DType dtype() const { return p_->dt; }

  template <typename T>
  T* data() {
    check_type<T>();
    return reinterpret_cast<T*>(p_->data.get());
  }
  template <typename T>
  const T* data() const {
    check_type<T>();
    return reinterpret_cast<const T*>(p_->data.get());
  }
  void* raw() { return p_->data.get(); }
  const void* raw() const { return p_->data.get(); }
  std::size_t nbytes() const { return static_cast<std::size_t>(p_->numel) * dtype_size(p_->dt); }

  bool requires_grad() const { return p_ && p_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    p_->requires_grad = v;
    return *this;
  }

  bool has_grad() const { return p_ && p_->grad != nullptr; }
  /// Allocates (zero-filled) the gradient buffer if absent.
  void ensure_grad();
  void zero_grad();
  void drop_grad() { p_->grad.reset(); }
  template <typename T>
  T* grad_data() {
    check_type<T>();
    ensure_grad();
    return reinterpret_cast<T*>(p_->grad.get());
  }
  template <typename T>
  const T* grad_data() const {
    check_type<T>();
    COLM_CHECK(has_grad(), Internal, "gradient not allocated");
    return reinterpret_cast<const T*>(p_->grad.get());
  }

  /// Identity for gradient-map keys and aliasing checks.
  const void* id() const { return p_.get(); }

  /// Deep copy of data (grad not copied).
  Tensor clone() const;
  /// Copy cast to the target dtype.
  Tensor to(DType dt) const;

  double item() const;
  /// Reads element i as double regardless of dtype.
  double at(i64 i) const;

  bool all_finite() const;

 private:
  struct Impl {
    std::vector<i64> shape;
    i64 numel = 0;
    DType dt = DType::F32;
    bool requires_grad = false;
    std::unique_ptr<std::byte[]> data;
    std::unique_ptr<std::byte[]> grad;
  };

  template <typename T>
  void check_type() const {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    COLM_CHECK(p_, Internal, "undefined tensor");
    COLM_CHECK((std::is_same_v<T, float>) == (p_->dt == DType::F32), DType,
               "tensor dtype is " << dtype_name(p_->dt));
  }

  std::shared_ptr<Impl> p_;
};

std::ostream& operator<<(std::ostream& os, const std::vector<i64>& shape);

/// Exact element-wise equality (same shape, dtype, and bits).
bool bit_equal(const Tensor& a, const Tensor& b);
/// max_i |a_i - b_i| / max(1, |b_i|).
double max_rel_err(const Tensor& a, const Tensor& b);
/// max_i |a_i - b_i|.
double max_abs_err(const Tensor& a, const Tensor& b);

}  // namespace colm
