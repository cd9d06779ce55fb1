#include "rdrsr/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace rdrsr {

namespace {
constexpr double kMaskPenalty = -1e9;
}

Node* embed_sequence(Graph& g, const EmbeddingParams& emb,
                     const std::vector<int>& window, int user, Node** eu_out) {
  if (static_cast<int>(window.size()) != emb.pos->rows())
    throw std::invalid_argument("embed_sequence: window length != t");
  for (int id : window)
    if (id < 0 || id >= emb.item->rows())
      throw std::out_of_range("embed_sequence: item id " + std::to_string(id) +
                              " out of range");
  if (user < 1 || user >= emb.user->rows())
    throw std::out_of_range("embed_sequence: user id " + std::to_string(user) +
                            " out of range");
  Node* items = g.gather_rows(emb.item, window);
  Node* E = g.add(items, emb.pos);
  if (eu_out) *eu_out = g.gather_rows(emb.user, {user});
  return E;
}

Node* self_attention(Graph& g, const BlockParams& bp, Node* E,
                     const std::vector<char>& key_mask) {
  const double d = static_cast<double>(E->cols());
  Node* Q = g.matmul(E, bp.Wq);
  Node* K = g.matmul(E, bp.Wk);
  Node* V = g.matmul(E, bp.Wv);
  Node* logits = g.scale(g.matmul(Q, g.transpose(K)), 1.0 / std::sqrt(d));
  // If every key is masked the penalty is uniform and softmax degrades
  // gracefully to uniform weights.
  logits = g.add_col_mask(logits, key_mask, kMaskPenalty);
  Node* weights = g.softmax_rows(logits);
  return g.matmul(weights, V);
}

Node* ffn(Graph& g, const BlockParams& bp, Node* S) {
  Node* hidden = g.relu(g.add_rowvec(g.matmul(S, bp.W1), bp.b1));
  return g.add_rowvec(g.matmul(hidden, bp.W2), bp.b2);
}

EncodedSequence encode(Graph& g, const ModelParams& mp,
                       const std::vector<int>& window, int user) {
  EncodedSequence out;
  out.pad_mask.resize(window.size());
  for (size_t i = 0; i < window.size(); ++i) {
    out.pad_mask[i] = window[i] == 0;
    if (window[i] != 0) ++out.real_count;
  }
  out.E = embed_sequence(g, mp.emb, window, user, &out.eu);
  Node* x = out.E;
  for (const BlockParams& bp : mp.enc.blocks) {
    x = ffn(g, bp, self_attention(g, bp, x, out.pad_mask));
  }
  out.F = x;
  return out;
}

}  // namespace rdrsr
