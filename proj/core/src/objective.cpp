#include "rdrsr/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdrsr {

namespace {

double pool_score(const Matrix& p, const Matrix& item_table, int target,
                  const std::vector<int>& negatives) {
  const int d = item_table.cols;
  auto score = [&](int id) {
    double s = 0;
    for (int j = 0; j < d; ++j) s += p.a[j] * item_table(id, j);
    return s;
  };
  std::vector<double> logits;
  logits.reserve(negatives.size() + 1);
  logits.push_back(score(target));
  for (int id : negatives) logits.push_back(score(id));
  const double mx = *std::max_element(logits.begin(), logits.end());
  double denom = 0;
  for (double v : logits) denom += std::exp(v - mx);
  return std::exp(logits[0] - mx) / denom;
}

}  // namespace

double reward_chosen(const Matrix& p, const Matrix& item_table, int target,
                     const std::vector<int>& negatives) {
  return pool_score(p, item_table, target, negatives);
}

double reward_baseline(const std::vector<Node*>& P, const Matrix& item_table,
                       int target, const std::vector<int>& negatives) {
  double sum = 0;
  for (Node* p : P) sum += pool_score(p->value, item_table, target, negatives);
  return sum / static_cast<double>(P.size());
}

double reward_orthogonal(const std::vector<Node*>& P) {
  const int h = static_cast<int>(P.size());
  if (h < 2) return 0.0;
  double sum = 0;
  for (int i = 0; i < h; ++i)
    for (int j = i + 1; j < h; ++j) {
      double dot = 0;
      for (int c = 0; c < P[i]->cols(); ++c) dot += P[i]->value.a[c] * P[j]->value.a[c];
      sum += std::fabs(dot);
    }
  return -sum / (h * (h - 1) / 2.0);
}

double total_reward(double r_chosen, double r_baseline, double r_orthogonal,
                    double lambda_o) {
  if (lambda_o < 0) throw std::invalid_argument("total_reward: lambda_o must be >= 0");
  return (r_chosen - r_baseline) + lambda_o * r_orthogonal;
}

RewardBundle compute_rewards(const Episode& ep, const Matrix& item_table, int target,
                             const std::vector<int>& negatives, double lambda_o) {
  RewardBundle rb;
  rb.r_chosen =
      reward_chosen(ep.P[ep.target_action]->value, item_table, target, negatives);
  rb.r_baseline = reward_baseline(ep.P, item_table, target, negatives);
  rb.r_advantage = rb.r_chosen - rb.r_baseline;
  rb.r_orthogonal = reward_orthogonal(ep.P);
  rb.r_total = total_reward(rb.r_chosen, rb.r_baseline, rb.r_orthogonal, lambda_o);
  return rb;
}

Node* rl_loss(Graph& g, const Episode& ep, double r_total) {
  if (!ep.target_logprob)
    throw std::logic_error("rl_loss: episode is missing the target-selection step");
  Node* total = ep.target_logprob;
  for (Node* lp : ep.logprobs) total = g.add(total, lp);
  return g.scale(total, -r_total);
}

Node* ce_loss(Graph& g, Node* p_chosen, Node* item_table, int target,
              const std::vector<int>& negatives) {
  std::vector<int> pool;
  pool.reserve(negatives.size() + 1);
  pool.push_back(target);
  pool.insert(pool.end(), negatives.begin(), negatives.end());
  Node* cand = g.gather_rows(item_table, pool);            // (o+1) x d
  Node* scores = g.matmul(p_chosen, g.transpose(cand));    // 1 x (o+1)
  return g.sub(g.log_sum_exp_row(scores), g.pick(scores, 0, 0));
}

Node* joint_loss(Graph& g, Node* ce, Node* rl, double beta) {
  if (beta < 0) throw std::invalid_argument("joint_loss: beta must be >= 0");
  return g.add(ce, g.scale(rl, beta));
}

}  // namespace rdrsr
