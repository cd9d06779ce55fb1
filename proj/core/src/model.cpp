#include "rdrsr/model.hpp"

#include <stdexcept>

#include "rdrsr/checkpoint.hpp"

namespace rdrsr {

Node* ModelParams::add_param(const std::string& name, Matrix value) {
  storage_.emplace_back();
  Node* n = &storage_.back();
  n->name = name;
  n->value = std::move(value);
  n->grad = Matrix(n->value.rows, n->value.cols);
  n->requires_grad = true;
  all_.push_back(n);
  return n;
}

Node* ModelParams::find(const std::string& name) const {
  for (Node* p : all_)
    if (p->name == name) return p;
  return nullptr;
}

void ModelParams::zero_grads() {
  for (Node* p : all_) p->zero_grad();
}

void ModelParams::scrub_frozen_grads() {
  for (int j = 0; j < emb.item->cols(); ++j) emb.item->grad(0, j) = 0.0;
  for (int j = 0; j < emb.user->cols(); ++j) emb.user->grad(0, j) = 0.0;
}

ModelParams init_params(int user_count, int item_count, int d, int t, int k,
                        int num_blocks, uint64_t seed) {
  if (d < 1 || t < 1 || k < 1 || num_blocks < 1)
    throw std::invalid_argument("init_params: d, t, k, num_blocks must be >= 1");
  ModelParams mp;
  mp.d = d;
  mp.t = t;
  mp.k = k;
  mp.num_blocks = num_blocks;
  mp.user_count = user_count;
  mp.item_count = item_count;

  std::mt19937_64 rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> unif(-scale, scale);
  auto weight = [&](int r, int c) {
    Matrix m(r, c);
    for (double& v : m.a) v = unif(rng);
    return m;
  };

  Matrix item = weight(item_count + 1, d);
  for (int j = 0; j < d; ++j) item(0, j) = 0.0;  // padding row
  mp.emb.item = mp.add_param("embed.item", std::move(item));
  Matrix user = weight(user_count + 1, d);
  for (int j = 0; j < d; ++j) user(0, j) = 0.0;  // no user 0
  mp.emb.user = mp.add_param("embed.user", std::move(user));
  mp.emb.pos = mp.add_param("embed.pos", weight(t, d));

  for (int b = 0; b < num_blocks; ++b) {
    const std::string pre = "enc.block" + std::to_string(b) + ".";
    BlockParams bp;
    bp.Wq = mp.add_param(pre + "Wq", weight(d, d));
    bp.Wk = mp.add_param(pre + "Wk", weight(d, d));
    bp.Wv = mp.add_param(pre + "Wv", weight(d, d));
    bp.W1 = mp.add_param(pre + "W1", weight(d, d));
    bp.b1 = mp.add_param(pre + "b1", Matrix(1, d));
    bp.W2 = mp.add_param(pre + "W2", weight(d, d));
    bp.b2 = mp.add_param(pre + "b2", Matrix(1, d));
    mp.enc.blocks.push_back(bp);
  }

  mp.did.Wf1 = mp.add_param("did.Wf1", weight(d, d));
  mp.did.Wu = mp.add_param("did.Wu", weight(d, d));
  mp.did.Wf2 = mp.add_param("did.Wf2", weight(d, 1));
  mp.did.b = mp.add_param("did.b", Matrix(1, 1));
  mp.did.Wk = mp.add_param("did.Wk", weight(d, k));

  const int di = d;  // hidden width of the policy head
  mp.dia.Wp1 = mp.add_param("dia.Wp1", weight(d, di));
  mp.dia.bp1 = mp.add_param("dia.bp1", Matrix(1, di));
  mp.dia.Wp2 = mp.add_param("dia.Wp2", weight(di, k));
  mp.dia.bp2 = mp.add_param("dia.bp2", Matrix(1, k));
  mp.dia.W0 = mp.add_param("dia.W0", weight(2 * d + k, d));

  return mp;
}

void save_params(const ModelParams& params, const std::string& path) {
  std::vector<NamedMatrix> recs;
  for (Node* p : params.all()) recs.push_back({p->name, p->value});
  save_archive(path, recs);
}

void load_params(ModelParams& params, const std::string& path) {
  auto recs = load_archive(path);
  for (auto& r : recs) {
    Node* p = params.find(r.name);
    if (!p) throw std::runtime_error("load_params: unknown parameter '" + r.name + "'");
    if (!p->value.same_shape(r.m))
      throw std::runtime_error("load_params: shape mismatch for '" + r.name + "'");
    p->value = std::move(r.m);
  }
}

}  // namespace rdrsr
