#pragma once

#include <functional>
#include <span>
#include <string>

#include "rdrsr/graph.hpp"

namespace rdrsr {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_coordinate;  // "param[index]"
};

/// Compares analytic gradients against central finite differences.
///
/// `loss` must rebuild the computation from the current parameter values and
/// return the scalar loss; when `with_grad` is true it must also run backward
/// so that every parameter's grad holds d(loss)/d(param). Any noise source
/// must be frozen so repeated evaluations agree.
///
/// Relative error per coordinate: |analytic - fd| / max(|analytic|, |fd|, 1e-8).
GradCheckResult grad_check(const std::function<double(bool with_grad)>& loss,
                           std::span<Node* const> params, double eps);

}  // namespace rdrsr
