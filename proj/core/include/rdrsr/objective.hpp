#pragma once

#include <vector>

#include "rdrsr/allocator.hpp"
#include "rdrsr/graph.hpp"

namespace rdrsr {

/// Terminal reward pieces for one window. All scalars are detached: they are
/// computed from values only and never carry gradient.
struct RewardBundle {
  double r_chosen = 0;
  double r_baseline = 0;
  double r_advantage = 0;
  double r_orthogonal = 0;
  double r_total = 0;
};

/// Sampled-softmax score of the target under representation p: the candidate
/// pool is the target plus the o negatives (o+1 denominator terms),
/// max-subtracted for stability.
double reward_chosen(const Matrix& p, const Matrix& item_table, int target,
                     const std::vector<int>& negatives);

/// Mean of the reward_chosen-style score over all h representations.
double reward_baseline(const std::vector<Node*>& P, const Matrix& item_table,
                       int target, const std::vector<int>& negatives);

/// Negated mean |p_i . p_j| over distinct pairs; 0 for h = 1 (no pairs).
double reward_orthogonal(const std::vector<Node*>& P);

double total_reward(double r_chosen, double r_baseline, double r_orthogonal,
                    double lambda_o);

RewardBundle compute_rewards(const Episode& ep, const Matrix& item_table, int target,
                             const std::vector<int>& negatives, double lambda_o);

/// -R_s * (sum of allocation log-probs + target-selection log-prob).
/// Gradients flow only through the log-probabilities.
Node* rl_loss(Graph& g, const Episode& ep, double r_total);

/// Sampled-softmax cross-entropy, differentiable w.r.t. the chosen
/// representation and every involved item embedding.
Node* ce_loss(Graph& g, Node* p_chosen, Node* item_table, int target,
              const std::vector<int>& negatives);

Node* joint_loss(Graph& g, Node* ce, Node* rl, double beta);

}  // namespace rdrsr
