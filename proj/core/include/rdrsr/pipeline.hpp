#pragma once

#include <random>

#include "rdrsr/allocator.hpp"
#include "rdrsr/config.hpp"
#include "rdrsr/dataio.hpp"
#include "rdrsr/encoder.hpp"
#include "rdrsr/graph.hpp"
#include "rdrsr/interest_count.hpp"
#include "rdrsr/model.hpp"

namespace rdrsr {

/// Everything the model computes for one window up to (and including) the
/// allocation rollout. The target-selection step and the losses are added by
/// the caller (training selects/scores the target item, evaluation scores
/// many candidates against the same rollout).
struct WindowRun {
  EncodedSequence enc;
  Node* f = nullptr;           // 1 x k count distribution
  std::vector<double> noise;   // frozen Gumbel draw (zeros in greedy mode)
  int h = 0;
  Node* z = nullptr;           // 1 x k
  Episode ep;                  // empty trace when the window has no real items
};

struct PipelineOptions {
  RolloutMode mode = RolloutMode::kSample;
  bool sample_noise = true;    // false: g = 0 (deterministic inference)
  int fixed_h = 0;             // > 0 bypasses the Gumbel sampler (RDRSR-F)
  double temperature = 10.0;
  bool literal_pair_mean = false;

  static PipelineOptions training(const RunConfig& cfg) {
    return {RolloutMode::kSample, true, cfg.fixed_h, cfg.temperature,
            cfg.literal_pair_mean};
  }
  static PipelineOptions inference(const RunConfig& cfg) {
    return {RolloutMode::kGreedy, false, cfg.fixed_h, cfg.temperature,
            cfg.literal_pair_mean};
  }
};

/// encode -> count head -> (Gumbel or fixed h) -> rollout. For an all-padding
/// window the rollout is skipped and the episode starts from h copies of the
/// user embedding with no allocation steps.
WindowRun run_window(Graph& g, const ModelParams& mp, const Window& w,
                     const PipelineOptions& opt, std::mt19937_64* rng);

}  // namespace rdrsr
