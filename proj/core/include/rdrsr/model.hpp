#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <random>
#include <vector>

#include "rdrsr/dataio.hpp"
#include "rdrsr/graph.hpp"

namespace rdrsr {

struct BlockParams {
  Node *Wq, *Wk, *Wv;      // d x d projections
  Node *W1, *b1, *W2, *b2;  // two-layer FFN
};

struct EncoderParams {
  std::vector<BlockParams> blocks;
};

struct DidParams {
  Node *Wf1, *Wu;  // d x d
  Node *Wf2;       // d x 1
  Node *b;         // 1 x 1
  Node *Wk;        // d x k
};

struct DiaParams {
  Node *Wp1, *bp1;  // d x d_i, 1 x d_i
  Node *Wp2, *bp2;  // d_i x k, 1 x k
  Node *W0;         // (2d + k) x d
};

struct EmbeddingParams {
  Node *item;  // (item_count + 1) x d, row 0 = padding, frozen
  Node *user;  // (user_count + 1) x d, row 0 unused
  Node *pos;   // t x d
};

/// Full trainable parameter set. Owns the leaf nodes; `all` is the stable
/// inventory order used by the optimizer and the checkpoint format.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(const ModelParams&) = delete;
  ModelParams& operator=(const ModelParams&) = delete;
  ModelParams(ModelParams&&) = default;
  ModelParams& operator=(ModelParams&&) = default;

  EmbeddingParams emb{};
  EncoderParams enc{};
  DidParams did{};
  DiaParams dia{};

  int d = 0, t = 0, k = 0, num_blocks = 0;
  int user_count = 0, item_count = 0;

  const std::vector<Node*>& all() const { return all_; }

  /// Registers a named leaf; used by init and checkpoint load.
  Node* add_param(const std::string& name, Matrix value);
  Node* find(const std::string& name) const;

  void zero_grads();
  /// Padding item row and the unused user row 0 never learn.
  void scrub_frozen_grads();

 private:
  std::deque<Node> storage_;
  std::vector<Node*> all_;
};

/// All weight matrices drawn uniform(-1/sqrt(d), 1/sqrt(d)), biases zero,
/// padding embedding row zero. Deterministic under seed.
ModelParams init_params(int user_count, int item_count, int d, int t, int k,
                        int num_blocks, uint64_t seed);

void save_params(const ModelParams& params, const std::string& path);
/// Restores values into an identically-shaped parameter set.
void load_params(ModelParams& params, const std::string& path);

}  // namespace rdrsr
