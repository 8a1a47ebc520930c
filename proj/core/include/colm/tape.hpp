#pragma once

#include <functional>
#include <vector>

#include "colm/tensor.hpp"

namespace colm {

/// Ordered record of executed operations. backward() replays the
/// record in exact reverse order, accumulating gradients additively
/// into each tensor's grad buffer (the identity-keyed gradient map).
/// A tape is confined to one execution context; the active tape is a
/// thread-local set by TapeScope.
class Tape {
 public:
  void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and walks the record backwards.
  /// `loss` must be a scalar produced while this tape was active.
  void backward(const Tensor& loss);

  void clear() { nodes_.clear(); }

  static Tape* current();

 private:
  std::vector<std::function<void()>> nodes_;
};

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

/// True when an active tape should record an op over these inputs.
bool recording(std::initializer_list<const Tensor*> inputs);

/// Max relative error between analytic gradients and central finite
/// differences, |a - n| / max(1, |n|), over every coordinate of every
/// input. Inputs must be float64; f must return a scalar.
double grad_check_multi(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                        std::vector<Tensor> inputs, double h = 1e-5);

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double h = 1e-5);

}  // namespace colm
