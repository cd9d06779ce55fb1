#pragma once

#include <random>
#include <vector>

#include "rdrsr/graph.hpp"
#include "rdrsr/model.hpp"

namespace rdrsr {

enum class RolloutMode { kSample, kGreedy };

/// One window's allocation trace: per-step actions with log-probabilities,
/// the final interest representations, and the target-selection step.
struct Episode {
  int h = 0;
  Node* z = nullptr;             // 1 x k relaxed count distribution
  std::vector<Node*> P;          // h interest representations, 1 x d each
  std::vector<int> counts;       // assignments + 1 (user-embedding initializer)
  std::vector<int> actions;      // in [0, h)
  std::vector<Node*> logprobs;   // one per allocated item
  int target_action = -1;
  Node* target_logprob = nullptr;
};

/// Policy over the h active sub-sequences: affine stack producing k logits,
/// sliced to the first h, then softmax.
Node* policy_probs(Graph& g, const DiaParams& dia, Node* s, int h);

/// Running arithmetic mean including the user-embedding initializer.
Node* update_interest(Graph& g, Node* p, int count, Node* item_rep);

/// s = concat(sum_j alpha_j p_j, next_rep, z) W0 with alpha the softmax of
/// inner products p_j . next_rep.
Node* next_state(Graph& g, const DiaParams& dia, const std::vector<Node*>& P,
                 Node* next_rep, Node* z);

/// Allocates every real (non-padding) item of the window to one of h
/// sub-sequences. P starts as h copies of the user embedding; each step
/// computes the state from the incoming item, samples (or argmaxes) an
/// action, and updates the chosen representation. rng may be null in greedy
/// mode.
/// literal_pair_mean switches the Eq-10 reading from a running mean to a
/// plain (p + item)/2 average of the previous representation and the item.
Episode rollout(Graph& g, const DiaParams& dia, Node* F,
                const std::vector<int>& window, Node* eu, int h, Node* z,
                RolloutMode mode, std::mt19937_64* rng,
                bool literal_pair_mean = false);

/// Builds the candidate state from the finalized P and runs the policy once;
/// P is not updated. Fills target_action / target_logprob.
void select_target_interest(Graph& g, const DiaParams& dia, Episode& ep,
                            Node* candidate_rep, RolloutMode mode,
                            std::mt19937_64* rng);

/// Sample from a 1 x h probability row (training) or argmax with lowest-index
/// tie-break (greedy).
int choose_action(const Matrix& probs, RolloutMode mode, std::mt19937_64* rng);

}  // namespace rdrsr
