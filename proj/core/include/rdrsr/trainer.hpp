#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rdrsr/adam.hpp"
#include "rdrsr/config.hpp"
#include "rdrsr/dataio.hpp"
#include "rdrsr/evaluator.hpp"
#include "rdrsr/model.hpp"
#include "rdrsr/objective.hpp"
#include "rdrsr/pipeline.hpp"

namespace rdrsr {

struct WindowStats {
  double loss = 0, ce = 0, rl = 0, reward = 0;
  int h = 0;
};

/// Builds the full differentiable loss for one training window: sampled
/// rollout, sampled target selection, detached rewards, CE + beta * RL.
/// Negatives are drawn from `negatives` (shared pool for reward and CE).
/// reward_override, when set, replaces the computed R_s (the gradient check
/// freezes R_s at the base point since it is detached by construction).
Node* window_loss(Graph& g, const ModelParams& mp, const RunConfig& cfg,
                  const Window& w, const std::vector<int>& negatives,
                  std::mt19937_64& rng, WindowStats* stats,
                  const double* reward_override = nullptr);

struct EpochStats {
  double mean_loss = 0, mean_ce = 0, mean_rl = 0, mean_reward = 0, mean_h = 0;
  int windows = 0;
};

/// One pass over the training windows: user-contiguous batches, batch order
/// shuffled per epoch, one Adam step per batch with the mean gradient.
EpochStats train_epoch(ModelParams& mp, Adam& adam, const SplitDataset& split,
                       const InteractionLog& log, const RunConfig& cfg, int epoch);

/// Paper default is 2048; desk-scale datasets get 256 unless the config
/// overrides the batch size explicitly.
int effective_batch_size(const RunConfig& cfg, int user_count);

struct ExperimentResult {
  MetricsReport test;
  std::vector<double> val_ndcg10_history;
  int best_epoch = -1;
  EpochStats last_epoch;
};

/// Full protocol: train with per-epoch validation (sampled mode), early-stop
/// on stagnant validation NDCG@10, restore the best checkpoint, evaluate on
/// test in cfg.eval_mode. Writes best.ckpt, metrics.txt, metrics.tsv and
/// train.log under cfg.out_dir. `echo`, when set, mirrors log lines.
ExperimentResult run_experiment(const RunConfig& cfg, const InteractionLog& log,
                                std::ostream* echo = nullptr);

/// k in [k_lo, k_hi] with identical seeds; one report per k.
std::vector<ExperimentResult> sweep_k(const RunConfig& base, const InteractionLog& log,
                                      int k_lo, int k_hi, std::ostream* echo = nullptr);

struct SynthResult {
  double count_accuracy = 0;       // deterministic h vs planted final count
  double purity = 0;               // majority-label fraction over allocated items
  MetricsReport test;
};

/// Trains on planted-interest data and scores interest-count recovery and
/// allocation purity against the sidecar labels.
SynthResult run_synth_experiment(const SyntheticSpec& spec, const RunConfig& cfg,
                                 std::ostream* echo = nullptr);

/// Model + optimizer + bookkeeping in one archive; round trips bit-exactly.
void save_training_checkpoint(const std::string& path, const ModelParams& mp,
                              const Adam& adam, int epoch,
                              const std::vector<double>& val_history,
                              const std::string& config_hash);
struct CheckpointMeta {
  int epoch = -1;
  std::vector<double> val_history;
  std::string config_hash;
};
CheckpointMeta load_training_checkpoint(const std::string& path, ModelParams& mp,
                                        Adam* adam);

/// Line-delimited episode trace: window id, h, actions, total log-prob.
void append_episode_trace(std::ostream& os, long window_id, const Episode& ep);

/// Finite-difference check of the full joint loss on a tiny instance
/// (d=4, t=3, k=2, o=3) with frozen Gumbel noise and action draws.
struct FullLossCheck {
  double max_rel_err = 0;
  std::string worst_coordinate;
};
FullLossCheck full_loss_grad_check(uint64_t seed, double eps = 1e-5);

}  // namespace rdrsr
