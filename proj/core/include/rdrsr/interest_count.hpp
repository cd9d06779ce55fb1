#pragma once

#include <random>
#include <vector>

#include "rdrsr/graph.hpp"
#include "rdrsr/model.hpp"

namespace rdrsr {

/// Count distribution f (1 x k): position attention over F conditioned on
/// the user embedding, attention-pooled, projected to k logits (clamped to
/// [-30, 30]) and softmax-normalized. Padding positions are masked out of
/// the position softmax; an all-padding window falls back to uniform
/// position weights.
Node* interest_logits(Graph& g, const DidParams& did, Node* F, Node* eu,
                      const std::vector<char>& pad_mask);

/// Inverse-transform Gumbel(0,1): -log(-log u), u clamped into (0,1).
double gumbel_noise(double u);

/// k iid Gumbel(0,1) draws.
std::vector<double> draw_gumbel(std::mt19937_64& rng, int k);

/// Gumbel-max: count = argmax_i(g_i + log f_i) + 1, lowest index on ties.
int sample_count(const std::vector<double>& f, const std::vector<double>& g);

/// Temperature-softened relaxation z; gradients flow into f, the noise is a
/// constant.
Node* relaxed_probs(Graph& g, Node* f, const std::vector<double>& noise, double temperature);

}  // namespace rdrsr
