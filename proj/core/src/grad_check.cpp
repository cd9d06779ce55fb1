#include "rdrsr/grad_check.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rdrsr {

GradCheckResult grad_check(const std::function<double(bool)>& loss,
                           std::span<Node* const> params, double eps) {
  if (eps <= 0) throw std::invalid_argument("grad_check: eps must be positive");

  for (Node* p : params) {
    if (p->grad.size() == 0) p->grad = Matrix(p->rows(), p->cols());
    p->zero_grad();
  }
  const double base = loss(true);
  if (!std::isfinite(base))
    throw std::runtime_error("grad_check: loss is non-finite at the evaluation point");

  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Node* p : params) analytic.push_back(p->grad);

  GradCheckResult res;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Node* p = params[pi];
    for (int i = 0; i < p->value.size(); ++i) {
      const double saved = p->value.a[i];
      p->value.a[i] = saved + eps;
      const double up = loss(false);
      p->value.a[i] = saved - eps;
      const double down = loss(false);
      p->value.a[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::runtime_error("grad_check: non-finite loss while perturbing " +
                                 p->name + "[" + std::to_string(i) + "]");
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic[pi].a[i];
      const double denom = std::max({std::fabs(an), std::fabs(fd), 1e-8});
      const double rel = std::fabs(an - fd) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_coordinate = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace rdrsr
