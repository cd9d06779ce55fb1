#include "rdrsr/allocator.hpp"

#include <stdexcept>

namespace rdrsr {

Node* policy_probs(Graph& g, const DiaParams& dia, Node* s, int h) {
  if (h < 1) throw std::invalid_argument("policy_probs: h must be >= 1");
  if (h > dia.Wp2->cols())
    throw std::invalid_argument("policy_probs: h exceeds max interest count k");
  Node* hidden = g.relu(g.add_rowvec(g.matmul(s, dia.Wp1), dia.bp1));
  Node* logits = g.add_rowvec(g.matmul(hidden, dia.Wp2), dia.bp2);  // 1 x k
  return g.softmax_rows(g.slice_cols(logits, 0, h));
}

Node* update_interest(Graph& g, Node* p, int count, Node* item_rep) {
  return g.scale(g.add(g.scale(p, static_cast<double>(count)), item_rep),
                 1.0 / (count + 1));
}

Node* next_state(Graph& g, const DiaParams& dia, const std::vector<Node*>& P,
                 Node* next_rep, Node* z) {
  Node* pmat = g.vconcat(P);  // h x d
  Node* sims = g.matmul(next_rep, g.transpose(pmat));  // 1 x h
  Node* alphas = g.softmax_rows(sims);
  Node* attended = g.matmul(alphas, pmat);  // 1 x d
  return g.matmul(g.hconcat({attended, next_rep, z}), dia.W0);
}

int choose_action(const Matrix& probs, RolloutMode mode, std::mt19937_64* rng) {
  const int h = probs.cols;
  if (mode == RolloutMode::kGreedy) {
    int best = 0;
    for (int i = 1; i < h; ++i)
      if (probs.a[i] > probs.a[best]) best = i;
    return best;
  }
  if (!rng) throw std::invalid_argument("choose_action: sampling needs an rng");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(*rng);
  double acc = 0;
  for (int i = 0; i < h; ++i) {
    acc += probs.a[i];
    if (u < acc) return i;
  }
  return h - 1;  // u landed in the rounding tail
}

Episode rollout(Graph& g, const DiaParams& dia, Node* F,
                const std::vector<int>& window, Node* eu, int h, Node* z,
                RolloutMode mode, std::mt19937_64* rng, bool literal_pair_mean) {
  Episode ep;
  ep.h = h;
  ep.z = z;
  ep.P.assign(h, eu);
  ep.counts.assign(h, 1);

  std::vector<int> real_positions;
  for (size_t i = 0; i < window.size(); ++i)
    if (window[i] != 0) real_positions.push_back(static_cast<int>(i));
  if (real_positions.empty())
    throw std::runtime_error("rollout: window has no real items");

  for (int pos : real_positions) {
    Node* item_rep = g.gather_rows(F, {pos});
    Node* s = next_state(g, dia, ep.P, item_rep, z);
    Node* probs = policy_probs(g, dia, s, h);
    const int a = choose_action(probs->value, mode, rng);
    ep.actions.push_back(a);
    ep.logprobs.push_back(g.log(g.pick(probs, 0, a)));
    ep.P[a] = literal_pair_mean
                  ? g.scale(g.add(ep.P[a], item_rep), 0.5)
                  : update_interest(g, ep.P[a], ep.counts[a], item_rep);
    ep.counts[a] += 1;
  }
  return ep;
}

void select_target_interest(Graph& g, const DiaParams& dia, Episode& ep,
                            Node* candidate_rep, RolloutMode mode,
                            std::mt19937_64* rng) {
  Node* s = next_state(g, dia, ep.P, candidate_rep, ep.z);
  Node* probs = policy_probs(g, dia, s, ep.h);
  ep.target_action = choose_action(probs->value, mode, rng);
  ep.target_logprob = g.log(g.pick(probs, 0, ep.target_action));
}

}  // namespace rdrsr
