#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rdrsr/evaluator.hpp"
#include "rdrsr/trainer.hpp"

namespace {

using namespace rdrsr;

/// Shared flag wiring: config file first, then CLI overrides on top.
struct ConfigArgs {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key=value config file");
    auto track = [this](const std::string& key) {
      return [this, key](const std::string& v) { overrides.emplace_back(key, v); };
    };
    cmd->add_option_function<std::string>("--dataset", track("dataset"), "interaction log path");
    cmd->add_option_function<std::string>("--out", track("out_dir"), "output directory");
    cmd->add_option_function<std::string>("--seed", track("seed"), "random seed");
    cmd->add_option_function<std::string>("--epochs", track("epochs"), "training epochs");
    cmd->add_option_function<std::string>("--k", track("k"), "max interest count");
    cmd->add_option_function<std::string>("--fixed-h", track("fixed_h"),
                                          "fixed interest count (RDRSR-F mode)");
    cmd->add_option_function<std::string>("--eval-mode", track("eval_mode"), "full|sampled");
    cmd->add_option_function<std::string>("--d", track("d"), "embedding dimension");
    cmd->add_option_function<std::string>("--t", track("t"), "window length");
    cmd->add_option_function<std::string>("--o", track("o"), "negative samples");
    cmd->add_option_function<std::string>("--lr", track("learning_rate"), "learning rate");
    cmd->add_option_function<std::string>("--batch", track("batch_size"), "batch size");
    cmd->add_option_function<std::string>("--patience", track("patience"), "early-stop patience");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) cfg = load_config_file(config_file, cfg);
    for (const auto& [k, v] : overrides) apply_config_kv(cfg, k, v);
    return cfg;
  }
};

InteractionLog load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty())
    throw std::runtime_error("no dataset given (use --dataset or a config file)");
  LoadOptions opt;
  opt.min_user_interactions = cfg.min_user_interactions;
  opt.min_item_interactions = cfg.min_item_interactions;
  LoadStats stats;
  InteractionLog log = load_interactions(cfg.dataset, opt, &stats);
  std::cout << "loaded " << cfg.dataset << ": " << stats.raw_users << " users, "
            << stats.raw_items << " items, " << stats.raw_interactions
            << " interactions pre-filter; kept " << log.user_count << " users, "
            << log.item_count << " items\n";
  return log;
}

int cmd_train(const ConfigArgs& args) {
  RunConfig cfg = args.resolve();
  const InteractionLog log = load_dataset(cfg);
  const ExperimentResult res = run_experiment(cfg, log, &std::cout);
  std::cout << "best epoch " << res.best_epoch << "\n" << res.test.table();
  return 0;
}

int cmd_evaluate(const ConfigArgs& args, const std::string& checkpoint,
                 const std::string& trace_path) {
  RunConfig cfg = args.resolve();
  const InteractionLog log = load_dataset(cfg);
  SplitDataset split = leave_one_out_split(log, cfg.t);
  ModelParams mp = init_params(log.user_count, log.item_count, cfg.d, cfg.t, cfg.k,
                               cfg.num_blocks, cfg.seed);
  load_training_checkpoint(checkpoint, mp, nullptr);
  const MetricsReport rep = evaluate(mp, cfg, split.test, log, cfg.eval_mode);
  std::cout << rep.table() << rep.tsv();
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream tsv(cfg.out_dir + "/metrics.tsv", std::ios::trunc);
  tsv << rep.tsv();
  if (!trace_path.empty()) {
    std::ofstream tr(trace_path, std::ios::trunc);
    long id = 0;
    for (const Window& w : split.test) {
      Graph g;
      g.set_recording(false);
      WindowRun run = run_window(g, mp, w, PipelineOptions::inference(cfg), nullptr);
      append_episode_trace(tr, id++, run.ep);
    }
    std::cout << "episode traces written to " << trace_path << "\n";
  }
  return 0;
}

int cmd_sweep_k(const ConfigArgs& args, int k_lo, int k_hi) {
  RunConfig cfg = args.resolve();
  const InteractionLog log = load_dataset(cfg);
  const auto results = sweep_k(cfg, log, k_lo, k_hi, &std::cout);
  std::cout << "\nk\tHR@10\tNDCG@10\tHR@50\tNDCG@50\n";
  for (size_t i = 0; i < results.size(); ++i) {
    const auto& t = results[i].test;
    std::cout << (k_lo + static_cast<int>(i)) << '\t' << t.hr10 << '\t' << t.ndcg10
              << '\t' << t.hr50 << '\t' << t.ndcg50 << '\n';
  }
  return 0;
}

int cmd_synth(const ConfigArgs& args, SyntheticSpec spec, bool generate_only) {
  RunConfig cfg = args.resolve();
  std::filesystem::create_directories(cfg.out_dir);
  const SyntheticData data = synth_generate(spec);
  write_synthetic(data, cfg.out_dir + "/synth.tsv", cfg.out_dir + "/synth.labels.tsv");
  std::cout << "synthetic log written to " << cfg.out_dir << "/synth.tsv\n";
  if (generate_only) return 0;
  const SynthResult res = run_synth_experiment(spec, cfg, &std::cout);
  std::cout << "count recovery accuracy " << res.count_accuracy << "\n"
            << "allocation purity " << res.purity << "\n"
            << res.test.table();
  return 0;
}

int cmd_grad_check(uint64_t seed, double eps, double tolerance) {
  const FullLossCheck r = full_loss_grad_check(seed, eps);
  std::cout << "max relative error " << r.max_rel_err << " at " << r.worst_coordinate
            << " (tolerance " << tolerance << ")\n";
  return r.max_rel_err < tolerance ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RDRSR sequential recommender"};
  app.require_subcommand(1);

  ConfigArgs train_args, eval_args, sweep_args, ablate_args, synth_args;

  auto* train = app.add_subcommand("train", "train a model and evaluate the best checkpoint");
  train_args.attach(train);

  auto* eval = app.add_subcommand("evaluate", "evaluate a saved checkpoint");
  eval_args.attach(eval);
  std::string checkpoint, trace_path;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--trace", trace_path, "write per-window episode traces here");

  auto* sweep = app.add_subcommand("sweep-k", "train once per max interest count k");
  sweep_args.attach(sweep);
  int k_lo = 1, k_hi = 7;
  sweep->add_option("--k-lo", k_lo, "sweep start");
  sweep->add_option("--k-hi", k_hi, "sweep end");

  auto* ablate = app.add_subcommand("ablate-fixed", "RDRSR-F: fixed interest count, no sampler");
  ablate_args.attach(ablate);
  int fixed_h = 3;
  ablate->add_option("--count", fixed_h, "fixed interest count");

  auto* synth = app.add_subcommand("synth", "generate planted-interest data, train, report recovery");
  synth_args.attach(synth);
  SyntheticSpec spec;
  bool generate_only = false;
  synth->add_option("--users", spec.users, "synthetic users");
  synth->add_option("--interests", spec.interests, "planted interests");
  synth->add_option("--items-per-interest", spec.items_per_interest, "pool size");
  synth->add_option("--seq-len", spec.seq_len, "sequence length");
  synth->add_option("--noise", spec.noise_rate, "noise click rate");
  synth->add_option("--synth-seed", spec.seed, "generator seed");
  synth->add_flag("--generate-only", generate_only, "write the data files and stop");

  auto* gc = app.add_subcommand("grad-check", "finite-difference check of the full loss");
  uint64_t gc_seed = 7;
  double gc_eps = 1e-5, gc_tol = 1e-4;
  gc->add_option("--seed", gc_seed, "seed");
  gc->add_option("--eps", gc_eps, "finite-difference step");
  gc->add_option("--tolerance", gc_tol, "max relative error to accept");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) return cmd_evaluate(eval_args, checkpoint, trace_path);
    if (sweep->parsed()) return cmd_sweep_k(sweep_args, k_lo, k_hi);
    if (ablate->parsed()) {
      ablate_args.overrides.emplace_back("fixed_h", std::to_string(fixed_h));
      return cmd_train(ablate_args);
    }
    if (synth->parsed()) return cmd_synth(synth_args, spec, generate_only);
    if (gc->parsed()) return cmd_grad_check(gc_seed, gc_eps, gc_tol);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
