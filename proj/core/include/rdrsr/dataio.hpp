#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

namespace rdrsr {

/// Per-user chronologically ordered item sequences. Users and items are
/// re-indexed densely from 1; id 0 is the padding item.
struct InteractionLog {
  int user_count = 0;  // users are 1..user_count
  int item_count = 0;  // items are 1..item_count
  std::vector<std::vector<int>> seq;  // seq[u], u in [1, user_count]; seq[0] unused

  int64_t total_interactions() const {
    int64_t n = 0;
    for (const auto& s : seq) n += static_cast<int64_t>(s.size());
    return n;
  }
};

struct LoadOptions {
  int min_user_interactions = 10;
  int min_item_interactions = 10;
  int min_sequence_length = 3;  // train/val/test all need a target
};

struct LoadStats {
  int64_t raw_interactions = 0;
  int raw_users = 0;
  int raw_items = 0;
  int dropped_short_users = 0;
};

/// Parses one interaction per line: user item [rating] timestamp, tab or
/// whitespace separated (MovieLens-100k u.data parses unchanged). Rows are
/// sorted per user by timestamp, ties kept in file order. Users/items below
/// the interaction thresholds are dropped (repeated until stable), then ids
/// are re-indexed densely from 1.
InteractionLog load_interactions(const std::string& path, const LoadOptions& opt = {},
                                 LoadStats* stats = nullptr);

struct Window {
  int user = 0;
  std::vector<int> input;  // fixed length t, left-padded with 0
  int target = 0;
};

struct SplitDataset {
  int t = 0;
  std::vector<Window> train;  // user-contiguous, chronological per user
  std::vector<Window> val;    // one per user
  std::vector<Window> test;   // one per user
};

/// Leave-one-out: last item -> test, second-to-last -> validation, the rest
/// train. Training windows slide over the training prefix, one window per
/// prefix position (the first window is all padding, targeting the user's
/// first item). Test inputs include the validation item.
SplitDataset leave_one_out_split(const InteractionLog& log, int t);

/// Keeps the most recent t items, or left-pads with id 0 up to length t.
std::vector<int> pad_or_truncate(const std::vector<int>& seq, int t);

/// o distinct item ids the user has not interacted with; never the padding
/// id, never `target`. Deterministic under seed.
std::vector<int> sample_negatives(const std::unordered_set<int>& positives,
                                  int item_count, int target, int o, uint64_t seed);

/// Planted-interest generator: each interest owns a disjoint item pool and
/// activates at schedule[i] (0-based position); clicks draw uniformly from
/// the active interests, noise clicks from the whole universe.
struct SyntheticSpec {
  int users = 100;
  int interests = 3;
  int items_per_interest = 10;
  int seq_len = 30;
  double noise_rate = 0.0;
  std::vector<int> schedule;  // empty = evenly spaced activation
  uint64_t seed = 1;
};

struct SyntheticLabels {
  // indexed [user][position], users 1-based like InteractionLog
  std::vector<std::vector<int>> interest_label;  // -1 for noise clicks
  std::vector<std::vector<int>> active_count;
};

struct SyntheticData {
  InteractionLog log;
  SyntheticLabels labels;
};

SyntheticData synth_generate(const SyntheticSpec& spec);

/// Writes the log in the tab-separated (user, item, timestamp) input format
/// plus a sidecar label file (user, position, interest_label, active_count).
void write_synthetic(const SyntheticData& data, const std::string& log_path,
                     const std::string& label_path);

}  // namespace rdrsr
