#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rdrsr/allocator.hpp"
#include "rdrsr/grad_check.hpp"
#include "rdrsr/graph.hpp"
#include "rdrsr/model.hpp"
#include "rdrsr/objective.hpp"

using namespace rdrsr;

namespace {

void fill_random(Matrix& m, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : m.a) v = u(rng);
}

Matrix random_row(std::mt19937_64& rng, int d, double scale = 1.0) {
  Matrix m(1, d);
  fill_random(m, rng, scale);
  return m;
}

/// Hand-built episode whose only content is the log-probability trace.
Episode logprob_episode(Graph& g, const std::vector<double>& step_probs,
                        double target_prob) {
  Episode ep;
  for (double p : step_probs)
    ep.logprobs.push_back(g.leaf(Matrix::scalar(std::log(p))));
  ep.target_logprob = g.leaf(Matrix::scalar(std::log(target_prob)));
  ep.target_action = 0;
  return ep;
}

}  // namespace

TEST_CASE("equal candidate scores share the probability mass evenly") {
  Matrix p(1, 3);  // zero vector: every inner product is 0
  Matrix items(101, 3);
  CHECK(reward_chosen(p, items, 1, {2}) == doctest::Approx(0.5));
  std::vector<int> negs;
  for (int i = 2; i <= 100; ++i) negs.push_back(i);
  CHECK(reward_chosen(p, items, 1, negs) == doctest::Approx(0.01));
}

TEST_CASE("chosen reward matches a naive unstabilized evaluation") {
  std::mt19937_64 rng(3);
  const int d = 4, m = 6;
  Matrix items(m + 1, d);
  fill_random(items, rng, 1.0);
  const Matrix p = random_row(rng, d, 1.0);
  const int target = 2;
  const std::vector<int> negs{1, 4, 6};
  double denom = 0;
  auto dot = [&](int id) {
    double s = 0;
    for (int j = 0; j < d; ++j) s += p(0, j) * items(id, j);
    return s;
  };
  denom = std::exp(dot(target));
  for (int id : negs) denom += std::exp(dot(id));
  const double naive = std::exp(dot(target)) / denom;
  CHECK(reward_chosen(p, items, target, negs) == doctest::Approx(naive).epsilon(1e-12));
  CHECK(reward_chosen(p, items, target, negs) > 0.0);
  CHECK(reward_chosen(p, items, target, negs) < 1.0);
}

TEST_CASE("chosen reward stays finite for scores up to 1e4") {
  const int d = 2;
  Matrix items(4, d);
  items(1, 0) = 1.0;
  items(2, 0) = -1.0;
  items(3, 1) = 1.0;
  Matrix p(1, d);
  p(0, 0) = 1e4;
  const double r = reward_chosen(p, items, 1, {2, 3});
  CHECK(std::isfinite(r));
  CHECK(r == doctest::Approx(1.0));
  p(0, 0) = -1e4;
  const double r2 = reward_chosen(p, items, 1, {2, 3});
  CHECK(std::isfinite(r2));
  CHECK(r2 < 1e-100);
}

TEST_CASE("baseline over identical representations equals the chosen reward") {
  std::mt19937_64 rng(5);
  const int d = 3;
  Matrix items(5, d);
  fill_random(items, rng, 1.0);
  const Matrix p = random_row(rng, d);
  Graph g;
  Node* pn = g.leaf(p);
  const std::vector<int> negs{3, 4};
  const double rc = reward_chosen(p, items, 1, negs);
  CHECK(reward_baseline({pn}, items, 1, negs) == doctest::Approx(rc).epsilon(1e-12));
  CHECK(reward_baseline({pn, pn, pn}, items, 1, negs) ==
        doctest::Approx(rc).epsilon(1e-12));
}

TEST_CASE("baseline is the arithmetic mean of the per-interest scores") {
  std::mt19937_64 rng(6);
  const int d = 3;
  Matrix items(6, d);
  fill_random(items, rng, 1.0);
  Graph g;
  Node* p1 = g.leaf(random_row(rng, d));
  Node* p2 = g.leaf(random_row(rng, d));
  const std::vector<int> negs{2, 5};
  const double s1 = reward_chosen(p1->value, items, 3, negs);
  const double s2 = reward_chosen(p2->value, items, 3, negs);
  CHECK(reward_baseline({p1, p2}, items, 3, negs) ==
        doctest::Approx((s1 + s2) / 2.0).epsilon(1e-12));
}

TEST_CASE("orthogonality penalty on hand-built representations") {
  Graph g;
  Node* ex = g.leaf(Matrix::row({1.0, 0.0}));
  Node* ey = g.leaf(Matrix::row({0.0, 1.0}));
  CHECK(reward_orthogonal({ex, ey}) == doctest::Approx(0.0));
  CHECK(reward_orthogonal({ex, ex}) == doctest::Approx(-1.0));
  CHECK(reward_orthogonal({ex}) == 0.0);  // no pairs for a single interest
  // Three representations with all pairwise inner products 0.5.
  const double c = std::sqrt(0.5);
  Node* a = g.leaf(Matrix::row({c, 0.0, c}));
  Node* b = g.leaf(Matrix::row({0.0, c, c}));
  Node* cc = g.leaf(Matrix::row({c, c, 0.0}));
  // a.b = 0.5, a.cc = 0.5, b.cc = 0.5.
  CHECK(reward_orthogonal({a, b, cc}) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("total reward arithmetic") {
  CHECK(total_reward(0.4, 0.4, 0.0, 0.001) == doctest::Approx(0.0));
  CHECK(total_reward(0.7, 0.2, -3.0, 0.0) == doctest::Approx(0.5));
  CHECK(total_reward(0.8, 0.5, -1.0, 0.001) == doctest::Approx(0.299));
  CHECK_THROWS_AS(total_reward(0.5, 0.5, 0.0, -0.1), std::invalid_argument);
}

TEST_CASE("policy loss for a three-halves trace") {
  Graph g;
  Episode ep = logprob_episode(g, {0.5, 0.5}, 0.5);
  Node* loss = rl_loss(g, ep, 1.0);
  CHECK(loss->value.a[0] == doctest::Approx(-std::log(0.125)).epsilon(1e-12));
  CHECK(loss->value.a[0] == doctest::Approx(2.0794).epsilon(1e-4));
}

TEST_CASE("zero reward zeroes the policy loss and its gradient") {
  Node lp;
  lp.name = "lp";
  lp.value = Matrix::scalar(std::log(0.3));
  lp.grad = Matrix(1, 1);
  lp.requires_grad = true;
  Graph g;
  Episode ep;
  ep.logprobs = {&lp};
  ep.target_logprob = g.leaf(Matrix::scalar(std::log(0.5)));
  Node* loss = rl_loss(g, ep, 0.0);
  CHECK(loss->value.a[0] == 0.0);
  g.backward(loss);
  CHECK(lp.grad.a[0] == 0.0);
}

TEST_CASE("degenerate single-interest trace has zero policy loss") {
  Graph g;
  Episode ep = logprob_episode(g, {1.0, 1.0, 1.0}, 1.0);
  Node* loss = rl_loss(g, ep, 0.7);
  CHECK(loss->value.a[0] == 0.0);
}

TEST_CASE("an episode without target selection is rejected") {
  Graph g;
  Episode ep;
  ep.logprobs = {g.leaf(Matrix::scalar(0.0))};
  CHECK_THROWS_AS(rl_loss(g, ep, 1.0), std::logic_error);
}

TEST_CASE("cross entropy of an uninformative representation is log of the pool size") {
  Graph g;
  Node* p = g.leaf(Matrix(1, 3));
  Node* items = g.leaf(Matrix(5, 3));
  Node* ce = ce_loss(g, p, items, 1, {2});
  CHECK(ce->value.a[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  Node* ce4 = ce_loss(g, p, items, 1, {2, 3, 4});
  CHECK(ce4->value.a[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy vanishes under a 30-unit margin") {
  Graph g;
  Matrix items(3, 2);
  items(1, 0) = 30.0;  // target score 30, negative score 0
  Node* p = g.leaf(Matrix::row({1.0, 0.0}));
  Node* ce = ce_loss(g, p, g.leaf(items), 1, {2});
  CHECK(ce->value.a[0] >= 0.0);
  CHECK(ce->value.a[0] < 1e-12);
}

TEST_CASE("cross entropy gradients match finite differences") {
  const int d = 4, o = 3;
  std::mt19937_64 rng(11);
  Node p, items;
  p.name = "p";
  p.value = random_row(rng, d);
  p.grad = Matrix(1, d);
  p.requires_grad = true;
  items.name = "items";
  items.value = Matrix(6, d);
  fill_random(items.value, rng, 1.0);
  items.grad = Matrix(6, d);
  items.requires_grad = true;
  const std::vector<int> negs{2, 4, 5};
  REQUIRE(static_cast<int>(negs.size()) == o);
  auto loss = [&](bool with_grad) {
    Graph g;
    if (!with_grad) g.set_recording(false);
    Node* ce = ce_loss(g, &p, &items, 1, negs);
    if (with_grad) g.backward(ce);
    return ce->value.a[0];
  };
  Node* params[] = {&p, &items};
  auto r = grad_check(loss, params, 1e-6);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("joint loss arithmetic") {
  Graph g;
  Node* ce = g.leaf(Matrix::scalar(0.6931));
  Node* rl = g.leaf(Matrix::scalar(2.0794));
  CHECK(joint_loss(g, ce, rl, 0.0)->value.a[0] == doctest::Approx(0.6931));
  CHECK(joint_loss(g, ce, rl, 1.0)->value.a[0] == doctest::Approx(2.7726).epsilon(1e-4));
  CHECK(joint_loss(g, ce, rl, 0.5)->value.a[0] ==
        doctest::Approx(0.6931 + 0.5 * 2.0794).epsilon(1e-12));
  CHECK_THROWS_AS(joint_loss(g, ce, rl, -1.0), std::invalid_argument);
}

TEST_CASE("reward bundle wires the pieces together") {
  const int d = 3;
  std::mt19937_64 rng(13);
  Matrix items(7, d);
  fill_random(items, rng, 1.0);
  Graph g;
  Episode ep;
  ep.h = 2;
  ep.P = {g.leaf(random_row(rng, d)), g.leaf(random_row(rng, d))};
  ep.target_action = 1;
  ep.target_logprob = g.leaf(Matrix::scalar(std::log(0.5)));
  const std::vector<int> negs{3, 6};
  const double lambda_o = 0.001;
  RewardBundle rb = compute_rewards(ep, items, 2, negs, lambda_o);
  CHECK(rb.r_chosen ==
        doctest::Approx(reward_chosen(ep.P[1]->value, items, 2, negs)).epsilon(1e-12));
  CHECK(rb.r_baseline ==
        doctest::Approx(reward_baseline(ep.P, items, 2, negs)).epsilon(1e-12));
  CHECK(rb.r_advantage == doctest::Approx(rb.r_chosen - rb.r_baseline).epsilon(1e-12));
  CHECK(rb.r_orthogonal == doctest::Approx(reward_orthogonal(ep.P)).epsilon(1e-12));
  CHECK(rb.r_total ==
        doctest::Approx(rb.r_advantage + lambda_o * rb.r_orthogonal).epsilon(1e-12));
  CHECK(rb.r_chosen > 0.0);
  CHECK(rb.r_chosen < 1.0);
  CHECK(rb.r_orthogonal <= 0.0);
}

TEST_CASE("monte carlo policy gradient matches exact enumeration on a toy mdp") {
  // Two real items, two interests, two dimensions. Every quantity except the
  // policy trace is constant, so the exact policy gradient can be computed by
  // enumerating the eight action sequences (2 allocation steps + target
  // selection, 2 choices each) and weighting each sequence's pathwise
  // gradient by its probability.
  const int d = 2, t = 2, k = 2, h = 2;
  ModelParams mp = init_params(2, 5, d, t, k, 1, 77);
  {
    std::mt19937_64 rng(78);
    for (Node* p : mp.all()) fill_random(p->value, rng, 0.8);
  }
  std::mt19937_64 data_rng(79);
  Matrix F(t, d), items(6, d);
  fill_random(F, data_rng, 1.0);
  fill_random(items, data_rng, 1.0);
  const Matrix eu = random_row(data_rng, d);
  const Matrix cand = random_row(data_rng, d);
  Matrix z(1, k);
  z(0, 0) = 0.45;
  z(0, 1) = 0.55;
  const std::vector<int> window{3, 5};
  const int target = 2;
  const std::vector<int> negs{1, 4};
  const double lambda_o = 0.001;

  std::vector<Node*> policy_params{mp.dia.Wp1, mp.dia.bp1, mp.dia.Wp2,
                                   mp.dia.bp2, mp.dia.W0};
  int n_coords = 0;
  for (Node* p : policy_params) n_coords += p->value.size();

  // Forced-action replay of the rollout, reusing only public ops so the
  // computation is identical to the sampled path.
  auto replay = [&](Graph& g, const std::vector<int>& actions, int target_action,
                    double* seq_prob) -> Episode {
    Episode ep;
    ep.h = h;
    Node* zn = g.leaf(z);
    ep.z = zn;
    Node* eun = g.leaf(eu);
    Node* Fn = g.leaf(F);
    ep.P = {eun, eun};
    ep.counts = {1, 1};
    double prob = 1.0;
    for (int step = 0; step < t; ++step) {
      Node* item = g.gather_rows(Fn, {step});
      Node* s = next_state(g, mp.dia, ep.P, item, zn);
      Node* probs = policy_probs(g, mp.dia, s, h);
      const int a = actions[step];
      prob *= probs->value(0, a);
      ep.logprobs.push_back(g.log(g.pick(probs, 0, a)));
      ep.actions.push_back(a);
      ep.P[a] = update_interest(g, ep.P[a], ep.counts[a], item);
      ++ep.counts[a];
    }
    Node* s = next_state(g, mp.dia, ep.P, g.leaf(cand), zn);
    Node* probs = policy_probs(g, mp.dia, s, h);
    prob *= probs->value(0, target_action);
    ep.target_action = target_action;
    ep.target_logprob = g.log(g.pick(probs, 0, target_action));
    if (seq_prob) *seq_prob = prob;
    return ep;
  };

  // Exact gradient: sum over sequences of P(seq) * grad(-R(seq) * log P(seq)).
  std::vector<double> exact(n_coords, 0.0);
  double prob_mass = 0;
  for (int a0 = 0; a0 < 2; ++a0)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int ts = 0; ts < 2; ++ts) {
        Graph g;
        double seq_prob = 0;
        Episode ep = replay(g, {a0, a1}, ts, &seq_prob);
        const RewardBundle rb = compute_rewards(ep, items, target, negs, lambda_o);
        Node* loss = rl_loss(g, ep, rb.r_total);
        mp.zero_grads();
        g.backward(loss);
        int c = 0;
        for (Node* p : policy_params)
          for (double gv : p->grad.a) exact[c++] += seq_prob * gv;
        prob_mass += seq_prob;
      }
  CHECK(prob_mass == doctest::Approx(1.0).epsilon(1e-12));

  // Monte Carlo estimate over sampled episodes, with per-coordinate variance
  // for the standard-error bound.
  const int episodes = 100000;
  std::vector<double> sum(n_coords, 0.0), sumsq(n_coords, 0.0);
  std::mt19937_64 rng(991);
  for (int e = 0; e < episodes; ++e) {
    Graph g;
    Episode ep = rollout(g, mp.dia, g.leaf(F), window, g.leaf(eu), h, g.leaf(z),
                         RolloutMode::kSample, &rng);
    select_target_interest(g, mp.dia, ep, g.leaf(cand), RolloutMode::kSample, &rng);
    const RewardBundle rb = compute_rewards(ep, items, target, negs, lambda_o);
    Node* loss = rl_loss(g, ep, rb.r_total);
    mp.zero_grads();
    g.backward(loss);
    int c = 0;
    for (Node* p : policy_params)
      for (double gv : p->grad.a) {
        sum[c] += gv;
        sumsq[c] += gv * gv;
        ++c;
      }
  }
  int worst = 0;
  double worst_sigmas = 0;
  for (int c = 0; c < n_coords; ++c) {
    const double mean = sum[c] / episodes;
    const double var = sumsq[c] / episodes - mean * mean;
    const double se = std::sqrt(std::max(var, 0.0) / episodes) + 1e-12;
    const double sigmas = std::fabs(mean - exact[c]) / se;
    if (sigmas > worst_sigmas) {
      worst_sigmas = sigmas;
      worst = c;
    }
  }
  CAPTURE(worst);
  CHECK(worst_sigmas < 3.0);
}
