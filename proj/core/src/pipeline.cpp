#include "rdrsr/pipeline.hpp"

#include <stdexcept>

namespace rdrsr {

WindowRun run_window(Graph& g, const ModelParams& mp, const Window& w,
                     const PipelineOptions& opt, std::mt19937_64* rng) {
  WindowRun run;
  run.enc = encode(g, mp, w.input, w.user);
  run.f = interest_logits(g, mp.did, run.enc.F, run.enc.eu, run.enc.pad_mask);

  if (opt.fixed_h > 0) {
    if (opt.fixed_h > mp.k)
      throw std::invalid_argument("run_window: fixed_h exceeds k");
    run.h = opt.fixed_h;
    Matrix onehot(1, mp.k);
    onehot(0, run.h - 1) = 1.0;
    run.z = g.leaf(std::move(onehot));
  } else {
    if (opt.sample_noise) {
      if (!rng) throw std::invalid_argument("run_window: noise sampling needs an rng");
      run.noise = draw_gumbel(*rng, mp.k);
    } else {
      run.noise.assign(mp.k, 0.0);
    }
    const std::vector<double> fvals(run.f->value.a.begin(), run.f->value.a.end());
    run.h = sample_count(fvals, run.noise);
    run.z = relaxed_probs(g, run.f, run.noise, opt.temperature);
  }

  if (run.enc.real_count > 0) {
    run.ep = rollout(g, mp.dia, run.enc.F, w.input, run.enc.eu, run.h, run.z,
                     opt.mode, rng, opt.literal_pair_mean);
  } else {
    run.ep.h = run.h;
    run.ep.z = run.z;
    run.ep.P.assign(run.h, run.enc.eu);
    run.ep.counts.assign(run.h, 1);
  }
  return run;
}

}  // namespace rdrsr
