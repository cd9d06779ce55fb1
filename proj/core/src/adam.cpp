#include "rdrsr/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace rdrsr {

void Adam::step(std::span<Node* const> params) {
  for (Node* p : params) {
    if (!p->grad.all_finite())
      throw std::runtime_error("adam: non-finite gradient for parameter '" + p->name + "'");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(step_));
  for (Node* p : params) {
    Slot& s = slots_[p->name];
    if (s.m.size() == 0) {
      s.m = Matrix(p->rows(), p->cols());
      s.v = Matrix(p->rows(), p->cols());
    }
    for (int i = 0; i < p->value.size(); ++i) {
      const double g = p->grad.a[i];
      s.m.a[i] = hyper_.beta1 * s.m.a[i] + (1.0 - hyper_.beta1) * g;
      s.v.a[i] = hyper_.beta2 * s.v.a[i] + (1.0 - hyper_.beta2) * g * g;
      const double mhat = s.m.a[i] / bc1;
      const double vhat = s.v.a[i] / bc2;
      p->value.a[i] -= hyper_.lr * mhat / (std::sqrt(vhat) + hyper_.eps);
    }
  }
}

void Adam::zero_grad(std::span<Node* const> params) {
  for (Node* p : params) p->zero_grad();
}

}  // namespace rdrsr
