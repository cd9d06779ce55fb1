#pragma once

#include <map>
#include <span>
#include <string>

#include "rdrsr/graph.hpp"

namespace rdrsr {

/// Adam with bias correction. Moments are keyed by parameter name so the
/// state survives checkpoint round trips.
struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  using Hyper = AdamHyper;

  explicit Adam(Hyper h = Hyper()) : hyper_(h) {}

  /// One update over all params. Gradients are read, never modified; call
  /// zero_grad() afterwards. A non-finite gradient aborts the step naming
  /// the parameter.
  void step(std::span<Node* const> params);

  static void zero_grad(std::span<Node* const> params);

  long step_count() const { return step_; }
  Hyper& hyper() { return hyper_; }
  const Hyper& hyper() const { return hyper_; }

  struct Slot {
    Matrix m, v;
  };
  std::map<std::string, Slot>& slots() { return slots_; }
  void set_step_count(long s) { step_ = s; }

 private:
  Hyper hyper_;
  long step_ = 0;
  std::map<std::string, Slot> slots_;
};

}  // namespace rdrsr
