#include "rdrsr/graph.hpp"

#include <algorithm>
#include <cmath>

namespace rdrsr {

namespace {

void check(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

std::string shape_str(const Node* n) {
  return std::to_string(n->rows()) + "x" + std::to_string(n->cols());
}

}  // namespace

Node* Graph::leaf(Matrix value) {
  nodes_.emplace_back();
  Node* n = &nodes_.back();
  n->value = std::move(value);
  return n;
}

Node* Graph::emit(Matrix value, std::span<Node* const> inputs,
                  std::function<void()> back, const char* op) {
  nodes_.emplace_back();
  Node* n = &nodes_.back();
  n->value = std::move(value);
  if (recording_) {
    bool needs = false;
    for (Node* in : inputs) needs = needs || in->requires_grad;
    if (needs) {
      n->requires_grad = true;
      n->grad = Matrix(n->value.rows, n->value.cols);
      n->back = std::move(back);
    }
  }
  (void)op;
  return n;
}

void Graph::backward(Node* root) {
  check(root->rows() == 1 && root->cols() == 1, "backward", "root must be scalar");
  if (!root->requires_grad)
    throw std::logic_error("backward: root does not require grad (recording off or no differentiable inputs)");
  root->grad.a[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->requires_grad && it->back) it->back();
  }
}

Node* Graph::matmul(Node* a, Node* b) {
  check(a->cols() == b->rows(), "matmul",
        shape_str(a) + " * " + shape_str(b));
  const int n = a->rows(), k = a->cols(), m = b->cols();
  Matrix out(n, m);
  const double* pa = a->value.a.data();
  const double* pb = b->value.a.data();
  double* po = out.a.data();
  for (int i = 0; i < n; ++i) {
    const double* ra = pa + static_cast<size_t>(i) * k;
    double* ro = po + static_cast<size_t>(i) * m;
    for (int l = 0; l < k; ++l) {
      const double v = ra[l];
      const double* rb = pb + static_cast<size_t>(l) * m;
      for (int j = 0; j < m; ++j) ro[j] += v * rb[j];
    }
  }
  Node* ins[] = {a, b};
  Node* outn = emit(std::move(out), ins, {}, "matmul");
  if (outn->requires_grad) {
    Node* o = outn;
    outn->back = [a, b, o, n, k, m]() {
      const double* g = o->grad.a.data();
      if (a->requires_grad) {
        double* ga = a->grad.a.data();
        const double* pb = b->value.a.data();
        for (int i = 0; i < n; ++i)
          for (int l = 0; l < k; ++l) {
            double s = 0;
            const double* rg = g + static_cast<size_t>(i) * m;
            const double* rb = pb + static_cast<size_t>(l) * m;
            for (int j = 0; j < m; ++j) s += rg[j] * rb[j];
            ga[static_cast<size_t>(i) * k + l] += s;
          }
      }
      if (b->requires_grad) {
        double* gb = b->grad.a.data();
        const double* pa = a->value.a.data();
        for (int l = 0; l < k; ++l)
          for (int i = 0; i < n; ++i) {
            const double v = pa[static_cast<size_t>(i) * k + l];
            const double* rg = g + static_cast<size_t>(i) * m;
            double* rb = gb + static_cast<size_t>(l) * m;
            for (int j = 0; j < m; ++j) rb[j] += v * rg[j];
          }
      }
    };
  }
  return outn;
}

Node* Graph::transpose(Node* a) {
  Matrix out(a->cols(), a->rows());
  for (int i = 0; i < a->rows(); ++i)
    for (int j = 0; j < a->cols(); ++j) out(j, i) = a->value(i, j);
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "transpose");
  if (o->requires_grad)
    o->back = [a, o]() {
      for (int i = 0; i < a->rows(); ++i)
        for (int j = 0; j < a->cols(); ++j) a->grad(i, j) += o->grad(j, i);
    };
  return o;
}

Node* Graph::add(Node* a, Node* b) {
  check(a->value.same_shape(b->value), "add",
        shape_str(a) + " + " + shape_str(b));
  Matrix out = a->value;
  for (int i = 0; i < out.size(); ++i) out.a[i] += b->value.a[i];
  Node* ins[] = {a, b};
  Node* o = emit(std::move(out), ins, {}, "add");
  if (o->requires_grad)
    o->back = [a, b, o]() {
      if (a->requires_grad)
        for (int i = 0; i < o->grad.size(); ++i) a->grad.a[i] += o->grad.a[i];
      if (b->requires_grad)
        for (int i = 0; i < o->grad.size(); ++i) b->grad.a[i] += o->grad.a[i];
    };
  return o;
}

Node* Graph::add_rowvec(Node* a, Node* v) {
  check(v->rows() == 1 && v->cols() == a->cols(), "add_rowvec",
        shape_str(a) + " + " + shape_str(v));
  Matrix out = a->value;
  for (int i = 0; i < a->rows(); ++i)
    for (int j = 0; j < a->cols(); ++j) out(i, j) += v->value(0, j);
  Node* ins[] = {a, v};
  Node* o = emit(std::move(out), ins, {}, "add_rowvec");
  if (o->requires_grad)
    o->back = [a, v, o]() {
      if (a->requires_grad)
        for (int i = 0; i < o->grad.size(); ++i) a->grad.a[i] += o->grad.a[i];
      if (v->requires_grad)
        for (int i = 0; i < a->rows(); ++i)
          for (int j = 0; j < a->cols(); ++j) v->grad(0, j) += o->grad(i, j);
    };
  return o;
}

Node* Graph::sub(Node* a, Node* b) { return add(a, scale(b, -1.0)); }

Node* Graph::scale(Node* a, double s) {
  Matrix out = a->value;
  for (double& x : out.a) x *= s;
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "scale");
  if (o->requires_grad)
    o->back = [a, o, s]() {
      for (int i = 0; i < o->grad.size(); ++i) a->grad.a[i] += s * o->grad.a[i];
    };
  return o;
}

Node* Graph::mul(Node* a, Node* b) {
  check(a->value.same_shape(b->value), "mul",
        shape_str(a) + " . " + shape_str(b));
  Matrix out = a->value;
  for (int i = 0; i < out.size(); ++i) out.a[i] *= b->value.a[i];
  Node* ins[] = {a, b};
  Node* o = emit(std::move(out), ins, {}, "mul");
  if (o->requires_grad)
    o->back = [a, b, o]() {
      if (a->requires_grad)
        for (int i = 0; i < o->grad.size(); ++i)
          a->grad.a[i] += b->value.a[i] * o->grad.a[i];
      if (b->requires_grad)
        for (int i = 0; i < o->grad.size(); ++i)
          b->grad.a[i] += a->value.a[i] * o->grad.a[i];
    };
  return o;
}

Node* Graph::relu(Node* a) {
  Matrix out = a->value;
  for (double& x : out.a) x = x > 0 ? x : 0.0;
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "relu");
  if (o->requires_grad)
    o->back = [a, o]() {
      for (int i = 0; i < o->grad.size(); ++i)
        if (a->value.a[i] > 0) a->grad.a[i] += o->grad.a[i];
    };
  return o;
}

Node* Graph::log(Node* a) {
  Matrix out = a->value;
  for (double& x : out.a) x = std::log(x);
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "log");
  if (o->requires_grad)
    o->back = [a, o]() {
      for (int i = 0; i < o->grad.size(); ++i)
        a->grad.a[i] += o->grad.a[i] / a->value.a[i];
    };
  return o;
}

Node* Graph::exp(Node* a) {
  Matrix out = a->value;
  for (double& x : out.a) x = std::exp(x);
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "exp");
  if (o->requires_grad)
    o->back = [a, o]() {
      for (int i = 0; i < o->grad.size(); ++i)
        a->grad.a[i] += o->value.a[i] * o->grad.a[i];
    };
  return o;
}

Node* Graph::abs(Node* a) {
  Matrix out = a->value;
  for (double& x : out.a) x = std::fabs(x);
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "abs");
  if (o->requires_grad)
    o->back = [a, o]() {
      for (int i = 0; i < o->grad.size(); ++i) {
        const double s = a->value.a[i] > 0 ? 1.0 : (a->value.a[i] < 0 ? -1.0 : 0.0);
        a->grad.a[i] += s * o->grad.a[i];
      }
    };
  return o;
}

Node* Graph::clamp(Node* a, double lo, double hi) {
  Matrix out = a->value;
  for (double& x : out.a) x = std::min(hi, std::max(lo, x));
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "clamp");
  if (o->requires_grad)
    o->back = [a, o, lo, hi]() {
      for (int i = 0; i < o->grad.size(); ++i) {
        const double x = a->value.a[i];
        if (x > lo && x < hi) a->grad.a[i] += o->grad.a[i];
      }
    };
  return o;
}

Node* Graph::softmax_rows(Node* a) {
  Matrix out(a->rows(), a->cols());
  for (int i = 0; i < a->rows(); ++i) {
    double mx = a->value(i, 0);
    for (int j = 1; j < a->cols(); ++j) mx = std::max(mx, a->value(i, j));
    double sum = 0;
    for (int j = 0; j < a->cols(); ++j) {
      out(i, j) = std::exp(a->value(i, j) - mx);
      sum += out(i, j);
    }
    for (int j = 0; j < a->cols(); ++j) out(i, j) /= sum;
  }
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "softmax_rows");
  if (o->requires_grad)
    o->back = [a, o]() {
      for (int i = 0; i < a->rows(); ++i) {
        double inner = 0;
        for (int j = 0; j < a->cols(); ++j) inner += o->grad(i, j) * o->value(i, j);
        for (int j = 0; j < a->cols(); ++j)
          a->grad(i, j) += o->value(i, j) * (o->grad(i, j) - inner);
      }
    };
  return o;
}

Node* Graph::log_sum_exp_row(Node* a) {
  check(a->rows() == 1, "log_sum_exp_row", "expects a row vector, got " + shape_str(a));
  double mx = a->value.a[0];
  for (double v : a->value.a) mx = std::max(mx, v);
  double sum = 0;
  for (double v : a->value.a) sum += std::exp(v - mx);
  Matrix out = Matrix::scalar(mx + std::log(sum));
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "log_sum_exp_row");
  if (o->requires_grad)
    o->back = [a, o, mx]() {
      double sum = 0;
      for (double v : a->value.a) sum += std::exp(v - mx);
      const double g = o->grad.a[0];
      for (int j = 0; j < a->cols(); ++j)
        a->grad.a[j] += g * std::exp(a->value.a[j] - mx) / sum;
    };
  return o;
}

Node* Graph::sum_all(Node* a) {
  double s = 0;
  for (double v : a->value.a) s += v;
  Node* ins[] = {a};
  Node* o = emit(Matrix::scalar(s), ins, {}, "sum_all");
  if (o->requires_grad)
    o->back = [a, o]() {
      const double g = o->grad.a[0];
      for (int i = 0; i < a->grad.size(); ++i) a->grad.a[i] += g;
    };
  return o;
}

Node* Graph::mean_all(Node* a) { return scale(sum_all(a), 1.0 / a->value.size()); }

Node* Graph::dot(Node* a, Node* b) {
  check(a->value.same_shape(b->value), "dot", shape_str(a) + " . " + shape_str(b));
  double s = 0;
  for (int i = 0; i < a->value.size(); ++i) s += a->value.a[i] * b->value.a[i];
  Node* ins[] = {a, b};
  Node* o = emit(Matrix::scalar(s), ins, {}, "dot");
  if (o->requires_grad)
    o->back = [a, b, o]() {
      const double g = o->grad.a[0];
      if (a->requires_grad)
        for (int i = 0; i < a->grad.size(); ++i) a->grad.a[i] += g * b->value.a[i];
      if (b->requires_grad)
        for (int i = 0; i < b->grad.size(); ++i) b->grad.a[i] += g * a->value.a[i];
    };
  return o;
}

Node* Graph::pick(Node* a, int r, int c) {
  check(r >= 0 && r < a->rows() && c >= 0 && c < a->cols(), "pick",
        "index (" + std::to_string(r) + "," + std::to_string(c) + ") out of " + shape_str(a));
  Node* ins[] = {a};
  Node* o = emit(Matrix::scalar(a->value(r, c)), ins, {}, "pick");
  if (o->requires_grad)
    o->back = [a, o, r, c]() { a->grad(r, c) += o->grad.a[0]; };
  return o;
}

Node* Graph::gather_rows(Node* table, std::vector<int> idx) {
  const int d = table->cols();
  Matrix out(static_cast<int>(idx.size()), d);
  for (size_t i = 0; i < idx.size(); ++i) {
    check(idx[i] >= 0 && idx[i] < table->rows(), "gather_rows",
          "row " + std::to_string(idx[i]) + " out of " + shape_str(table));
    for (int j = 0; j < d; ++j) out(static_cast<int>(i), j) = table->value(idx[i], j);
  }
  Node* ins[] = {table};
  Node* o = emit(std::move(out), ins, {}, "gather_rows");
  if (o->requires_grad)
    o->back = [table, o, idx = std::move(idx), d]() {
      for (size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < d; ++j)
          table->grad(idx[i], j) += o->grad(static_cast<int>(i), j);
    };
  return o;
}

Node* Graph::slice_cols(Node* a, int begin, int count) {
  check(begin >= 0 && count >= 1 && begin + count <= a->cols(), "slice_cols",
        "[" + std::to_string(begin) + "," + std::to_string(begin + count) + ") of " + shape_str(a));
  Matrix out(a->rows(), count);
  for (int i = 0; i < a->rows(); ++i)
    for (int j = 0; j < count; ++j) out(i, j) = a->value(i, begin + j);
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "slice_cols");
  if (o->requires_grad)
    o->back = [a, o, begin, count]() {
      for (int i = 0; i < a->rows(); ++i)
        for (int j = 0; j < count; ++j) a->grad(i, begin + j) += o->grad(i, j);
    };
  return o;
}

Node* Graph::hconcat(std::vector<Node*> parts) {
  check(!parts.empty(), "hconcat", "no parts");
  const int r = parts[0]->rows();
  int c = 0;
  for (Node* p : parts) {
    check(p->rows() == r, "hconcat", "row mismatch " + shape_str(p));
    c += p->cols();
  }
  Matrix out(r, c);
  int off = 0;
  for (Node* p : parts) {
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < p->cols(); ++j) out(i, off + j) = p->value(i, j);
    off += p->cols();
  }
  Node* o = emit(std::move(out), parts, {}, "hconcat");
  if (o->requires_grad)
    o->back = [parts = std::move(parts), o, r]() {
      int off = 0;
      for (Node* p : parts) {
        if (p->requires_grad)
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < p->cols(); ++j) p->grad(i, j) += o->grad(i, off + j);
        off += p->cols();
      }
    };
  return o;
}

Node* Graph::vconcat(std::vector<Node*> parts) {
  check(!parts.empty(), "vconcat", "no parts");
  const int c = parts[0]->cols();
  int r = 0;
  for (Node* p : parts) {
    check(p->cols() == c, "vconcat", "col mismatch " + shape_str(p));
    r += p->rows();
  }
  Matrix out(r, c);
  int off = 0;
  for (Node* p : parts) {
    for (int i = 0; i < p->rows(); ++i)
      for (int j = 0; j < c; ++j) out(off + i, j) = p->value(i, j);
    off += p->rows();
  }
  Node* o = emit(std::move(out), parts, {}, "vconcat");
  if (o->requires_grad)
    o->back = [parts = std::move(parts), o, c]() {
      int off = 0;
      for (Node* p : parts) {
        if (p->requires_grad)
          for (int i = 0; i < p->rows(); ++i)
            for (int j = 0; j < c; ++j) p->grad(i, j) += o->grad(off + i, j);
        off += p->rows();
      }
    };
  return o;
}

Node* Graph::add_col_mask(Node* a, const std::vector<char>& masked, double penalty) {
  check(static_cast<int>(masked.size()) == a->cols(), "add_col_mask",
        "mask length " + std::to_string(masked.size()) + " vs " + shape_str(a));
  Matrix out = a->value;
  for (int i = 0; i < a->rows(); ++i)
    for (int j = 0; j < a->cols(); ++j)
      if (masked[j]) out(i, j) += penalty;
  Node* ins[] = {a};
  Node* o = emit(std::move(out), ins, {}, "add_col_mask");
  if (o->requires_grad)
    o->back = [a, o]() {
      for (int i = 0; i < o->grad.size(); ++i) a->grad.a[i] += o->grad.a[i];
    };
  return o;
}

}  // namespace rdrsr
