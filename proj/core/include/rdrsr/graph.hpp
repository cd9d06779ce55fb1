#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "rdrsr/matrix.hpp"

namespace rdrsr {

/// One value in the computation graph. Leaves (parameters, inputs) have no
/// backward closure; interior nodes add their upstream gradient into the
/// grads of their inputs. grad accumulates across backward calls until
/// explicitly zeroed.
struct Node {
  Matrix value;
  Matrix grad;  // allocated iff requires_grad
  bool requires_grad = false;
  std::function<void()> back;  // empty for leaves
  std::string name;            // set for parameters, used in diagnostics

  int rows() const { return value.rows; }
  int cols() const { return value.cols; }
  void zero_grad() { grad.zero(); }
};

/// Tape-style computation graph: ops append nodes in execution order, so the
/// node list is already a topological order and backward() walks it in
/// reverse. Interior nodes are owned by the graph; parameter leaves live
/// outside (see ParamStore) and only their grads are touched.
///
/// With recording disabled (inference), ops still compute values but build no
/// closures and mark nothing differentiable.
class Graph {
 public:
  Node* leaf(Matrix value);  // non-differentiable input owned by the graph
  Node* scalar(double v) { return leaf(Matrix::scalar(v)); }

  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  /// Accumulates d(root)/d(leaf) into every reachable requires_grad leaf.
  /// root must be 1x1. Repeated calls accumulate.
  void backward(Node* root);

  size_t node_count() const { return nodes_.size(); }

  // --- ops (closed set) ---
  Node* matmul(Node* a, Node* b);
  Node* transpose(Node* a);
  Node* add(Node* a, Node* b);              // same shape
  Node* add_rowvec(Node* a, Node* v);       // v is 1 x cols, added to each row
  Node* sub(Node* a, Node* b);
  Node* scale(Node* a, double s);
  Node* mul(Node* a, Node* b);              // elementwise, same shape
  Node* relu(Node* a);
  Node* log(Node* a);
  Node* exp(Node* a);
  Node* abs(Node* a);
  Node* clamp(Node* a, double lo, double hi);
  Node* softmax_rows(Node* a);              // per-row, max-subtracted
  Node* log_sum_exp_row(Node* a);           // a is 1 x n -> 1 x 1
  Node* sum_all(Node* a);                   // -> 1 x 1
  Node* mean_all(Node* a);                  // -> 1 x 1
  Node* dot(Node* a, Node* b);              // same shape -> 1 x 1
  Node* pick(Node* a, int r, int c);        // -> 1 x 1
  Node* gather_rows(Node* table, std::vector<int> idx);
  Node* slice_cols(Node* a, int begin, int count);
  Node* hconcat(std::vector<Node*> parts);  // same rows, columns appended
  Node* vconcat(std::vector<Node*> parts);  // same cols, rows appended
  /// Adds `penalty` to every masked position (mask[i] true = masked). Used to
  /// drop padding keys before a softmax.
  Node* add_col_mask(Node* a, const std::vector<char>& masked, double penalty);

 private:
  Node* emit(Matrix value, std::span<Node* const> inputs,
             std::function<void()> back, const char* op);

  std::deque<Node> nodes_;
  bool recording_ = true;
};

}  // namespace rdrsr
