#pragma once

#include <vector>

#include "rdrsr/graph.hpp"
#include "rdrsr/model.hpp"

namespace rdrsr {

struct EncodedSequence {
  Node* E = nullptr;   // t x d input embeddings (item + position)
  Node* F = nullptr;   // t x d output of the last block
  Node* eu = nullptr;  // 1 x d user embedding
  std::vector<char> pad_mask;  // true where window[i] == 0
  int real_count = 0;
};

/// E[i] = E_item[window[i]] + P[i]; also returns the user embedding.
Node* embed_sequence(Graph& g, const EmbeddingParams& emb,
                     const std::vector<int>& window, int user, Node** eu_out);

/// Single-head scaled dot-product attention over the whole window
/// (bi-directional, no causal mask). Padding positions are masked out as
/// keys; queries at padding positions still produce rows but never influence
/// real positions.
Node* self_attention(Graph& g, const BlockParams& bp, Node* E,
                     const std::vector<char>& key_mask);

/// Row-wise two-layer FFN with shared weights.
Node* ffn(Graph& g, const BlockParams& bp, Node* S);

/// Stacked (self_attention -> ffn) blocks.
EncodedSequence encode(Graph& g, const ModelParams& mp,
                       const std::vector<int>& window, int user);

}  // namespace rdrsr
