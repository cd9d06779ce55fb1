#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace rdrsr {

enum class EvalMode { kFull, kSampled };

/// One experiment's knobs. Defaults follow the published protocol
/// (d=64, t=10, T=10, lambda_o=0.001, beta=1, batch=2048, lr=0.001);
/// batch size is automatically reduced to 256 on datasets under 5000 users.
struct RunConfig {
  std::string dataset;        // interaction log path
  std::string out_dir = "out";
  int d = 64;
  int t = 10;
  int k = 4;
  int o = 99;                  // negative samples
  double temperature = 10.0;
  double lambda_o = 0.001;
  double beta = 1.0;
  int num_blocks = 2;
  double learning_rate = 0.001;
  int batch_size = 2048;
  int epochs = 100;
  int patience = 10;           // early stopping on validation NDCG@10
  uint64_t seed = 42;
  int fixed_h = 0;             // > 0: RDRSR-F with this constant count
  EvalMode eval_mode = EvalMode::kFull;
  bool literal_pair_mean = false;  // Eq. 10 variant: (p + F) / 2 instead of running mean
  int min_user_interactions = 10;
  int min_item_interactions = 10;

  /// Stable hash over every field, reported with metrics.
  std::string config_hash() const;
};

/// Flat key=value file, '#' comments. Unknown keys are an error.
RunConfig load_config_file(const std::string& path, RunConfig base = {});
/// Applies one key=value pair (the CLI funnels overrides through this).
void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value);

std::string eval_mode_name(EvalMode m);

}  // namespace rdrsr
