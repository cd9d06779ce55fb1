#include <doctest.h>

#include <cmath>
#include <random>

#include "rdrsr/adam.hpp"
#include "rdrsr/checkpoint.hpp"
#include "rdrsr/grad_check.hpp"
#include "rdrsr/graph.hpp"

using namespace rdrsr;

namespace {

Matrix random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(r, c);
  for (double& v : m.a) v = u(rng);
  return m;
}

struct Param {
  Node node;
  Param(const std::string& name, Matrix v) {
    node.name = name;
    node.value = std::move(v);
    node.grad = Matrix(node.value.rows, node.value.cols);
    node.requires_grad = true;
  }
};

}  // namespace

TEST_CASE("matmul identity returns the other operand") {
  std::mt19937_64 rng(1);
  Graph g;
  Matrix id(2, 2);
  id(0, 0) = id(1, 1) = 1.0;
  Matrix a = random_matrix(rng, 2, 2);
  Node* out = g.matmul(g.leaf(id), g.leaf(a));
  for (int i = 0; i < 4; ++i) CHECK(out->value.a[i] == doctest::Approx(a.a[i]));
}

TEST_CASE("softmax of equal logits is uniform") {
  Graph g;
  Node* out = g.softmax_rows(g.leaf(Matrix::row({0.0, 0.0})));
  CHECK(out->value.a[0] == doctest::Approx(0.5));
  CHECK(out->value.a[1] == doctest::Approx(0.5));
}

TEST_CASE("relu definition") {
  Graph g;
  Node* out = g.relu(g.leaf(Matrix::row({1.5, -2.0})));
  CHECK(out->value.a[0] == 1.5);
  CHECK(out->value.a[1] == 0.0);
}

TEST_CASE("shape mismatch raises a structured error naming the op") {
  Graph g;
  Node* a = g.leaf(Matrix(2, 3));
  Node* b = g.leaf(Matrix(2, 3));
  CHECK_THROWS_WITH_AS(g.matmul(a, b), doctest::Contains("matmul"), ShapeError);
}

TEST_CASE("backward of sum(relu(x))") {
  Param x("x", Matrix::row({1.0, -2.0}));
  Graph g;
  Node* root = g.sum_all(g.relu(&x.node));
  g.backward(root);
  CHECK(x.node.grad.a[0] == 1.0);
  CHECK(x.node.grad.a[1] == 0.0);
}

TEST_CASE("backward before forward (recording off) is a state error") {
  Graph g;
  g.set_recording(false);
  Param x("x", Matrix::scalar(2.0));
  Node* root = g.mul(&x.node, &x.node);
  CHECK_THROWS_AS(g.backward(root), std::logic_error);
}

TEST_CASE("x^2 gradient matches finite differences") {
  Param x("x", Matrix::scalar(3.0));
  auto loss = [&](bool with_grad) {
    Graph g;
    if (!with_grad) g.set_recording(false);
    Node* root = g.mul(&x.node, &x.node);
    if (with_grad) g.backward(root);
    return root->value.a[0];
  };
  Node* params[] = {&x.node};
  auto r = grad_check(loss, params, 1e-5);
  CHECK(r.max_rel_err < 1e-6);
  CHECK(x.node.grad.a[0] == doctest::Approx(6.0));
}

TEST_CASE("log softmax pick gradient is onehot minus softmax") {
  Param x("x", Matrix::row({0.3, -0.2, 1.1, 0.4}));
  const int target = 2;
  Graph g;
  Node* sm = g.softmax_rows(&x.node);
  Node* root = g.log(g.pick(sm, 0, target));
  g.backward(root);
  for (int j = 0; j < 4; ++j) {
    const double expect = (j == target ? 1.0 : 0.0) - sm->value.a[j];
    CHECK(x.node.grad.a[j] == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("constant function has zero gradient and zero check error") {
  Param x("x", Matrix::row({1.0, 2.0}));
  auto loss = [&](bool with_grad) {
    Graph g;
    if (!with_grad) g.set_recording(false);
    Node* root = g.sum_all(g.scale(&x.node, 0.0));
    if (with_grad) g.backward(root);
    return root->value.a[0];
  };
  Node* params[] = {&x.node};
  auto r = grad_check(loss, params, 1e-5);
  CHECK(r.max_rel_err == 0.0);
  CHECK(x.node.grad.a[0] == 0.0);
}

TEST_CASE("unreachable leaf keeps zero gradient") {
  Param x("x", Matrix::scalar(1.0));
  Param y("y", Matrix::scalar(2.0));
  Graph g;
  Node* root = g.mul(&x.node, &x.node);
  g.backward(root);
  CHECK(y.node.grad.a[0] == 0.0);
}

TEST_CASE("composite ops match finite differences on random shapes") {
  // One randomized scalar function exercising every op in the closed set.
  for (uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const int t = 2 + static_cast<int>(rng() % 3);
    const int d = 2 + static_cast<int>(rng() % 3);
    Param A("A", random_matrix(rng, t, d));
    Param B("B", random_matrix(rng, d, d));
    Param v("v", random_matrix(rng, 1, d));
    Param w("w", random_matrix(rng, 1, 4));
    auto loss = [&](bool with_grad) {
      Graph g;
      if (!with_grad) g.set_recording(false);
      Node* M = g.matmul(&A.node, &B.node);
      Node* att = g.softmax_rows(g.scale(g.matmul(M, g.transpose(M)), 0.5));
      Node* mixed = g.add_rowvec(g.matmul(att, M), &v.node);
      Node* nl = g.relu(mixed);
      Node* ex = g.exp(g.clamp(nl, -3.0, 3.0));
      Node* lg = g.log(ex);
      Node* pieces = g.hconcat({g.sum_all(g.mul(nl, nl)), g.mean_all(g.abs(lg)),
                                g.dot(&v.node, &v.node),
                                g.log_sum_exp_row(g.slice_cols(g.gather_rows(g.vconcat({mixed}), {0}), 0, d))});
      Node* mixed2 = g.add(pieces, g.gather_rows(&w.node, {0}));
      Node* root = g.pick(g.softmax_rows(mixed2), 0, 1);
      root = g.sub(g.sum_all(mixed2), root);
      if (with_grad) g.backward(root);
      return root->value.a[0];
    };
    Node* params[] = {&A.node, &B.node, &v.node, &w.node};
    auto r = grad_check(loss, params, 1e-6);
    CAPTURE(seed);
    CAPTURE(r.worst_coordinate);
    CHECK(r.max_rel_err < 1e-4);
  }
}

TEST_CASE("softmax rows are a distribution") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    Graph g;
    Node* s = g.softmax_rows(g.leaf(random_matrix(rng, 3, 5, 10.0)));
    for (int i = 0; i < 3; ++i) {
      double sum = 0;
      for (int j = 0; j < 5; ++j) {
        CHECK(s->value(i, j) >= 0.0);
        sum += s->value(i, j);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("repeated backward accumulates into grads") {
  Param x("x", Matrix::scalar(3.0));
  Graph g;
  Node* root = g.mul(&x.node, &x.node);
  g.backward(root);
  // A second backward over a fresh graph adds on top.
  Graph g2;
  Node* root2 = g2.mul(&x.node, &x.node);
  g2.backward(root2);
  CHECK(x.node.grad.a[0] == doctest::Approx(12.0));
}

TEST_CASE("adam first step moves by about -lr for unit gradient") {
  Param p("p", Matrix::scalar(1.0));
  p.node.grad.a[0] = 1.0;
  Adam adam({0.001});
  Node* params[] = {&p.node};
  adam.step(params);
  const double delta = p.node.value.a[0] - 1.0;
  CHECK(std::fabs(delta + 0.001) < 1e-6);
}

TEST_CASE("adam leaves parameters unchanged for zero gradient") {
  Param p("p", Matrix::row({1.0, -2.0}));
  Adam adam({0.01});
  Node* params[] = {&p.node};
  adam.step(params);
  CHECK(p.node.value.a[0] == 1.0);
  CHECK(p.node.value.a[1] == -2.0);
}

TEST_CASE("adam is deterministic and rejects NaN gradients") {
  auto run = []() {
    Param p("p", Matrix::scalar(0.5));
    Adam adam({0.01});
    Node* params[] = {&p.node};
    for (int i = 0; i < 2; ++i) {
      p.node.grad.a[0] = 1.0;
      adam.step(params);
    }
    return p.node.value.a[0];
  };
  CHECK(run() == run());

  Param p("p", Matrix::scalar(0.5));
  p.node.grad.a[0] = std::nan("");
  Adam adam;
  Node* params[] = {&p.node};
  CHECK_THROWS_WITH_AS(adam.step(params), doctest::Contains("p"), std::runtime_error);
}

TEST_CASE("checkpoint archive round trip is bit-exact") {
  std::mt19937_64 rng(5);
  std::vector<NamedMatrix> recs;
  recs.push_back({"alpha", random_matrix(rng, 3, 4)});
  recs.push_back({"beta", random_matrix(rng, 1, 7)});
  const std::string path = "diffcore_test.ckpt";
  save_archive(path, recs);
  auto loaded = load_archive(path);
  save_archive(path + "2", loaded);
  auto loaded2 = load_archive(path + "2");
  REQUIRE(loaded2.size() == recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(loaded2[i].name == recs[i].name);
    REQUIRE(loaded2[i].m.same_shape(recs[i].m));
    for (int j = 0; j < recs[i].m.size(); ++j)
      CHECK(loaded2[i].m.a[j] == recs[i].m.a[j]);
  }
  std::remove(path.c_str());
  std::remove((path + "2").c_str());
}
