#include "rdrsr/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "rdrsr/pipeline.hpp"

namespace rdrsr {

double hr_at_k(int rank, int K) {
  if (rank < 1) throw std::invalid_argument("hr_at_k: rank must be >= 1");
  return rank <= K ? 1.0 : 0.0;
}

double ndcg_at_k(int rank, int K) {
  if (rank < 1) throw std::invalid_argument("ndcg_at_k: rank must be >= 1");
  return rank <= K ? 1.0 / std::log2(rank + 1.0) : 0.0;
}

std::vector<double> score_candidates(const ModelParams& mp, const RunConfig& cfg,
                                     const Window& w,
                                     const std::vector<int>& candidates) {
  Graph g;
  g.set_recording(false);
  WindowRun run = run_window(g, mp, w, PipelineOptions::inference(cfg), nullptr);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (int cand : candidates) {
    if (cand < 1 || cand > mp.item_count)
      throw std::out_of_range("score_candidates: candidate id " + std::to_string(cand));
    Node* e_cand = g.gather_rows(mp.emb.item, {cand});
    Episode ep = run.ep;  // shares P nodes; target selection does not mutate P
    select_target_interest(g, mp.dia, ep, e_cand, RolloutMode::kGreedy, nullptr);
    const Matrix& p = ep.P[ep.target_action]->value;
    double s = 0;
    for (int j = 0; j < mp.d; ++j) s += p.a[j] * e_cand->value(0, j);
    scores.push_back(s);
  }
  return scores;
}

MetricsReport evaluate(const ModelParams& mp, const RunConfig& cfg,
                       const std::vector<Window>& eval_windows,
                       const InteractionLog& log, EvalMode mode) {
  const auto start = std::chrono::steady_clock::now();
  MetricsReport rep;
  rep.config_hash = cfg.config_hash();
  rep.eval_mode = eval_mode_name(mode);

  double hr10 = 0, nd10 = 0, hr50 = 0, nd50 = 0;  // compensated sums
  double c_hr10 = 0, c_nd10 = 0, c_hr50 = 0, c_nd50 = 0;
  auto kahan = [](double& sum, double& comp, double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };

  for (const Window& w : eval_windows) {
    if (w.target == 0) {
      ++rep.skipped_users;
      continue;
    }
    std::unordered_set<int> positives(log.seq[w.user].begin(), log.seq[w.user].end());
    std::vector<int> candidates;
    if (mode == EvalMode::kFull) {
      candidates.push_back(w.target);
      for (int id = 1; id <= log.item_count; ++id)
        if (!positives.count(id)) candidates.push_back(id);
    } else {
      candidates.push_back(w.target);
      const uint64_t seed = cfg.seed * 0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(w.user);
      auto negs = sample_negatives(positives, log.item_count, w.target, cfg.o, seed);
      candidates.insert(candidates.end(), negs.begin(), negs.end());
    }
    const auto scores = score_candidates(mp, cfg, w, candidates);
    const double target_score = scores[0];
    int rank = 1;
    for (size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] > target_score ||
          (scores[i] == target_score && candidates[i] < w.target))
        ++rank;
    }
    rep.ranks.push_back(rank);
    ++rep.evaluated_users;
    kahan(hr10, c_hr10, hr_at_k(rank, 10));
    kahan(nd10, c_nd10, ndcg_at_k(rank, 10));
    kahan(hr50, c_hr50, hr_at_k(rank, 50));
    kahan(nd50, c_nd50, ndcg_at_k(rank, 50));
  }

  if (rep.evaluated_users > 0) {
    rep.hr10 = hr10 / rep.evaluated_users;
    rep.ndcg10 = nd10 / rep.evaluated_users;
    rep.hr50 = hr50 / rep.evaluated_users;
    rep.ndcg50 = nd50 / rep.evaluated_users;
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::string MetricsReport::table() const {
  std::ostringstream os;
  os << "mode=" << eval_mode << " users=" << evaluated_users
     << " skipped=" << skipped_users << " wall=" << wall_seconds << "s\n";
  os << "  HR@10   " << hr10 << "\n  NDCG@10 " << ndcg10 << "\n  HR@50   " << hr50
     << "\n  NDCG@50 " << ndcg50 << "\n";
  return os.str();
}

std::string MetricsReport::tsv() const {
  std::ostringstream os;
  os << "hr\t10\t" << hr10 << '\t' << config_hash << '\n'
     << "ndcg\t10\t" << ndcg10 << '\t' << config_hash << '\n'
     << "hr\t50\t" << hr50 << '\t' << config_hash << '\n'
     << "ndcg\t50\t" << ndcg50 << '\t' << config_hash << '\n';
  return os.str();
}

}  // namespace rdrsr
