#pragma once

#include <string>
#include <vector>

#include "rdrsr/config.hpp"
#include "rdrsr/dataio.hpp"
#include "rdrsr/model.hpp"

namespace rdrsr {

struct MetricsReport {
  double hr10 = 0, ndcg10 = 0, hr50 = 0, ndcg50 = 0;
  int evaluated_users = 0;
  int skipped_users = 0;
  std::vector<int> ranks;  // 1-based rank of the target, per evaluated user
  std::string config_hash;
  std::string eval_mode;
  double wall_seconds = 0;

  std::string table() const;  // human-readable
  std::string tsv() const;    // metric \t K \t value \t config_hash lines
};

double hr_at_k(int rank, int K);
double ndcg_at_k(int rank, int K);

/// Greedy, noise-free scoring of candidate items for one window: the rollout
/// is computed once, then every candidate runs target selection against the
/// same interest representations and scores p_chosen . e_candidate.
std::vector<double> score_candidates(const ModelParams& mp, const RunConfig& cfg,
                                     const Window& w,
                                     const std::vector<int>& candidates);

/// Ranks each user's held-out target among either all non-interacted items
/// (kFull) or o sampled negatives (kSampled). Ties broken by ascending item
/// id. `log` supplies per-user positive sets.
MetricsReport evaluate(const ModelParams& mp, const RunConfig& cfg,
                       const std::vector<Window>& eval_windows,
                       const InteractionLog& log, EvalMode mode);

}  // namespace rdrsr
