#include "colm/tape.hpp"

#include <cmath>

namespace colm {

namespace {
thread_local Tape* g_current = nullptr;
}

Tape* Tape::current() { return g_current; }

TapeScope::TapeScope(Tape& tape) : prev_(g_current) { g_current = &tape; }
TapeScope::~TapeScope() { g_current = prev_; }

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (!g_current) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

void Tape::backward(const Tensor& loss) {
  COLM_CHECK(loss.defined() && loss.numel() == 1, Shape,
             "backward requires a scalar loss, shape is " << loss.shape());
  Tensor seed = loss;  // shares storage
  seed.ensure_grad();
  if (seed.dtype() == DType::F32) {
    seed.grad_data<float>()[0] += 1.0f;
  } else {
    seed.grad_data<double>()[0] += 1.0;
  }
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

namespace {

std::vector<double> collect_analytic(const std::vector<Tensor>& inputs) {
  std::vector<double> out;
  for (const Tensor& t : inputs) {
    if (t.has_grad()) {
      const double* g = t.grad_data<double>();
      out.insert(out.end(), g, g + t.numel());
    } else {
      out.insert(out.end(), static_cast<std::size_t>(t.numel()), 0.0);
    }
  }
  return out;
}

}  // namespace

double grad_check_multi(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                        std::vector<Tensor> inputs, double h) {
  for (Tensor& t : inputs) {
    COLM_CHECK(t.dtype() == DType::F64, DType, "grad_check requires float64 inputs");
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Tape tape;
  {
    TapeScope scope(tape);
    Tensor loss = f(inputs);
    COLM_CHECK(loss.numel() == 1, Shape, "grad_check: f must be scalar-valued");
    COLM_CHECK(std::isfinite(loss.item()), Nan, "grad_check: non-finite loss value");
    tape.backward(loss);
  }
  std::vector<double> analytic = collect_analytic(inputs);

  double worst = 0.0;
  std::size_t flat = 0;
  for (Tensor& t : inputs) {
    double* x = t.data<double>();
    for (i64 i = 0; i < t.numel(); ++i, ++flat) {
      const double saved = x[i];
      x[i] = saved + h;
      double fp = f(inputs).item();
      x[i] = saved - h;
      double fm = f(inputs).item();
      x[i] = saved;
      COLM_CHECK(std::isfinite(fp) && std::isfinite(fm), Nan,
                 "grad_check: non-finite intermediate value");
      double numeric = (fp - fm) / (2.0 * h);
      double err = std::abs(analytic[flat] - numeric) / std::max(1.0, std::abs(numeric));
      if (err > worst) worst = err;
    }
  }
  return worst;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  return grad_check_multi([&f](const std::vector<Tensor>& xs) { return f(xs[0]); }, {x}, h);
}

}  // namespace colm
