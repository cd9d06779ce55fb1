#include "rdrsr/dataio.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace rdrsr {

namespace {

struct Row {
  int64_t user, item;
  double ts;
  int64_t order;  // file order, breaks timestamp ties
};

}  // namespace

InteractionLog load_interactions(const std::string& path, const LoadOptions& opt,
                                 LoadStats* stats) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_interactions: cannot open '" + path + "'");

  std::vector<Row> rows;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string f;
    while (ls >> f) fields.push_back(f);
    if (fields.size() != 3 && fields.size() != 4)
      throw std::runtime_error("load_interactions: malformed row at line " +
                               std::to_string(lineno) + " (" +
                               std::to_string(fields.size()) + " fields)");
    Row r;
    try {
      r.user = std::stoll(fields[0]);
      r.item = std::stoll(fields[1]);
      r.ts = std::stod(fields.back());  // rating column, if present, is ignored
    } catch (const std::exception&) {
      throw std::runtime_error("load_interactions: malformed row at line " +
                               std::to_string(lineno));
    }
    r.order = lineno;
    rows.push_back(r);
  }

  if (stats) {
    stats->raw_interactions = static_cast<int64_t>(rows.size());
    std::unordered_set<int64_t> us, its;
    for (const Row& r : rows) {
      us.insert(r.user);
      its.insert(r.item);
    }
    stats->raw_users = static_cast<int>(us.size());
    stats->raw_items = static_cast<int>(its.size());
  }

  // Drop users/items below the interaction thresholds, repeating until stable.
  std::vector<char> keep(rows.size(), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<int64_t, int> ucount, icount;
    for (size_t i = 0; i < rows.size(); ++i)
      if (keep[i]) {
        ++ucount[rows[i].user];
        ++icount[rows[i].item];
      }
    for (size_t i = 0; i < rows.size(); ++i) {
      if (!keep[i]) continue;
      if (ucount[rows[i].user] < opt.min_user_interactions ||
          icount[rows[i].item] < opt.min_item_interactions) {
        keep[i] = 0;
        changed = true;
      }
    }
  }

  // Group per raw user, sort by (timestamp, file order).
  std::map<int64_t, std::vector<Row>> by_user;  // ordered map: dense ids deterministic
  for (size_t i = 0; i < rows.size(); ++i)
    if (keep[i]) by_user[rows[i].user].push_back(rows[i]);

  int dropped_short = 0;
  std::unordered_map<int64_t, int> item_id;
  InteractionLog log;
  log.seq.push_back({});  // slot 0 unused
  for (auto& [raw_user, urows] : by_user) {
    if (static_cast<int>(urows.size()) < opt.min_sequence_length) {
      ++dropped_short;
      continue;
    }
    std::stable_sort(urows.begin(), urows.end(), [](const Row& a, const Row& b) {
      if (a.ts != b.ts) return a.ts < b.ts;
      return a.order < b.order;
    });
    std::vector<int> s;
    s.reserve(urows.size());
    for (const Row& r : urows) {
      auto [it, inserted] = item_id.try_emplace(r.item, static_cast<int>(item_id.size()) + 1);
      s.push_back(it->second);
    }
    log.seq.push_back(std::move(s));
  }
  log.user_count = static_cast<int>(log.seq.size()) - 1;
  log.item_count = static_cast<int>(item_id.size());
  if (stats) stats->dropped_short_users = dropped_short;
  if (log.user_count == 0)
    throw std::runtime_error("load_interactions: no users left after filtering '" + path + "'");
  return log;
}

std::vector<int> pad_or_truncate(const std::vector<int>& seq, int t) {
  if (t < 1) throw std::invalid_argument("pad_or_truncate: t must be >= 1");
  std::vector<int> out(t, 0);
  const int n = static_cast<int>(seq.size());
  const int take = std::min(n, t);
  for (int i = 0; i < take; ++i) out[t - take + i] = seq[n - take + i];
  return out;
}

SplitDataset leave_one_out_split(const InteractionLog& log, int t) {
  SplitDataset ds;
  ds.t = t;
  for (int u = 1; u <= log.user_count; ++u) {
    const auto& s = log.seq[u];
    const int L = static_cast<int>(s.size());
    if (L < 3)
      throw std::runtime_error("leave_one_out_split: user " + std::to_string(u) +
                               " has fewer than 3 interactions");
    // train prefix = s[0..L-3], val target = s[L-2], test target = s[L-1]
    for (int j = 0; j + 2 < L; ++j) {
      Window w;
      w.user = u;
      w.input = pad_or_truncate(std::vector<int>(s.begin(), s.begin() + j), t);
      w.target = s[j];
      ds.train.push_back(std::move(w));
    }
    Window val;
    val.user = u;
    val.input = pad_or_truncate(std::vector<int>(s.begin(), s.end() - 2), t);
    val.target = s[L - 2];
    ds.val.push_back(std::move(val));
    Window test;
    test.user = u;
    test.input = pad_or_truncate(std::vector<int>(s.begin(), s.end() - 1), t);
    test.target = s[L - 1];
    ds.test.push_back(std::move(test));
  }
  return ds;
}

std::vector<int> sample_negatives(const std::unordered_set<int>& positives,
                                  int item_count, int target, int o, uint64_t seed) {
  if (o < 1) throw std::invalid_argument("sample_negatives: o must be >= 1");
  auto eligible = [&](int id) {
    return id != target && positives.find(id) == positives.end();
  };
  int eligible_count = 0;
  for (int id = 1; id <= item_count; ++id)
    if (eligible(id)) ++eligible_count;
  if (eligible_count < o)
    throw std::runtime_error("sample_negatives: only " + std::to_string(eligible_count) +
                             " eligible items, need " + std::to_string(o));

  std::mt19937_64 rng(seed);
  std::vector<int> out;
  out.reserve(o);
  if (o * 3 >= eligible_count) {
    // Dense case: partial Fisher-Yates over the explicit candidate list.
    std::vector<int> cand;
    cand.reserve(eligible_count);
    for (int id = 1; id <= item_count; ++id)
      if (eligible(id)) cand.push_back(id);
    for (int i = 0; i < o; ++i) {
      std::uniform_int_distribution<int> d(i, static_cast<int>(cand.size()) - 1);
      std::swap(cand[i], cand[d(rng)]);
      out.push_back(cand[i]);
    }
  } else {
    std::unordered_set<int> seen;
    std::uniform_int_distribution<int> d(1, item_count);
    while (static_cast<int>(out.size()) < o) {
      const int id = d(rng);
      if (!eligible(id) || !seen.insert(id).second) continue;
      out.push_back(id);
    }
  }
  return out;
}

SyntheticData synth_generate(const SyntheticSpec& spec) {
  if (spec.users < 1 || spec.interests < 1 || spec.items_per_interest < 1 || spec.seq_len < 1)
    throw std::invalid_argument("synth_generate: counts must be positive");
  std::vector<int> schedule = spec.schedule;
  if (schedule.empty()) {
    for (int i = 0; i < spec.interests; ++i)
      schedule.push_back(i * spec.seq_len / spec.interests);
  }
  if (static_cast<int>(schedule.size()) != spec.interests)
    throw std::invalid_argument("synth_generate: schedule length must equal interests");
  if (schedule[0] != 0)
    throw std::invalid_argument("synth_generate: first interest must be active from position 0");
  for (size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] < schedule[i - 1])
      throw std::invalid_argument("synth_generate: schedule must be non-decreasing");

  const int m = spec.interests * spec.items_per_interest;
  SyntheticData data;
  data.log.user_count = spec.users;
  data.log.item_count = m;
  data.log.seq.assign(spec.users + 1, {});
  data.labels.interest_label.assign(spec.users + 1, {});
  data.labels.active_count.assign(spec.users + 1, {});

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int u = 1; u <= spec.users; ++u) {
    for (int p = 0; p < spec.seq_len; ++p) {
      int active = 0;
      for (int i = 0; i < spec.interests; ++i)
        if (schedule[i] <= p) ++active;
      int label, item;
      if (spec.noise_rate > 0 && unif(rng) < spec.noise_rate) {
        label = -1;
        std::uniform_int_distribution<int> d(1, m);
        item = d(rng);
      } else {
        std::uniform_int_distribution<int> di(0, active - 1);
        label = di(rng);
        std::uniform_int_distribution<int> dp(0, spec.items_per_interest - 1);
        item = label * spec.items_per_interest + 1 + dp(rng);
      }
      data.log.seq[u].push_back(item);
      data.labels.interest_label[u].push_back(label);
      data.labels.active_count[u].push_back(active);
    }
  }
  return data;
}

void write_synthetic(const SyntheticData& data, const std::string& log_path,
                     const std::string& label_path) {
  std::ofstream lo(log_path, std::ios::trunc);
  if (!lo) throw std::runtime_error("write_synthetic: cannot open '" + log_path + "'");
  for (int u = 1; u <= data.log.user_count; ++u)
    for (size_t p = 0; p < data.log.seq[u].size(); ++p)
      lo << u << '\t' << data.log.seq[u][p] << '\t' << p << '\n';
  std::ofstream lb(label_path, std::ios::trunc);
  if (!lb) throw std::runtime_error("write_synthetic: cannot open '" + label_path + "'");
  for (int u = 1; u <= data.log.user_count; ++u)
    for (size_t p = 0; p < data.labels.interest_label[u].size(); ++p)
      lb << u << '\t' << p << '\t' << data.labels.interest_label[u][p] << '\t'
         << data.labels.active_count[u][p] << '\n';
}

}  // namespace rdrsr
