#include "rdrsr/interest_count.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdrsr {

Node* interest_logits(Graph& g, const DidParams& did, Node* F, Node* eu,
                      const std::vector<char>& pad_mask) {
  // a = softmax over positions of ((F W_f1 + e_u W_u) W_f2 + b)
  Node* mixed = g.add_rowvec(g.matmul(F, did.Wf1), g.matmul(eu, did.Wu));
  Node* pos_logits = g.transpose(g.add_rowvec(g.matmul(mixed, did.Wf2), did.b));  // 1 x t
  const bool all_padding =
      std::all_of(pad_mask.begin(), pad_mask.end(), [](char c) { return c != 0; });
  // With every position masked the softmax has no support; fall back to
  // uniform weights so the pooled vector is the plain row mean.
  Node* a = all_padding
                ? g.leaf(Matrix(1, F->value.rows,
                                std::vector<double>(F->value.rows,
                                                    1.0 / F->value.rows)))
                : g.softmax_rows(g.add_col_mask(pos_logits, pad_mask, -1e9));
  Node* pooled = g.matmul(a, F);  // 1 x d
  Node* raw = g.clamp(g.matmul(pooled, did.Wk), -30.0, 30.0);
  return g.softmax_rows(raw);
}

double gumbel_noise(double u) {
  u = std::min(1.0 - 1e-12, std::max(1e-12, u));
  return -std::log(-std::log(u));
}

std::vector<double> draw_gumbel(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> out(k);
  for (double& v : out) v = gumbel_noise(unif(rng));
  return out;
}

int sample_count(const std::vector<double>& f, const std::vector<double>& g) {
  if (f.empty() || f.size() != g.size())
    throw std::invalid_argument("sample_count: f and g must be equal-length, non-empty");
  int best = 0;
  double best_v = std::log(f[0]) + g[0];
  for (size_t i = 1; i < f.size(); ++i) {
    const double v = std::log(f[i]) + g[i];
    if (v > best_v) {
      best_v = v;
      best = static_cast<int>(i);
    }
  }
  return best + 1;  // count in [1, k]
}

Node* relaxed_probs(Graph& g, Node* f, const std::vector<double>& noise, double temperature) {
  if (temperature <= 0) throw std::invalid_argument("relaxed_probs: temperature must be > 0");
  if (static_cast<int>(noise.size()) != f->cols())
    throw std::invalid_argument("relaxed_probs: noise length != k");
  Node* gn = g.leaf(Matrix::row(noise));
  Node* y = g.scale(g.add(g.log(f), gn), 1.0 / temperature);
  return g.softmax_rows(y);
}

}  // namespace rdrsr
