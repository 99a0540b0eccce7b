#include "idd/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "idd/features.hpp"

namespace hhi::idd {

double lr_scale_for_epoch(int epoch, int total_epochs) {
  double frac = static_cast<double>(epoch - 1) / std::max(1, total_epochs);
  if (frac >= 0.9) return 0.01;
  if (frac >= 0.75) return 0.1;
  return 1.0;
}

TrainResult train_model(const data::Dataset& trainset, const TrainConfig& cfg,
                        std::ostream* log) {
  if (trainset.windows.empty()) throw ConfigError("training set is empty");
  if (cfg.epochs < 1 || cfg.batch < 1) throw ConfigError("epochs and batch must be positive");

  const ModelSpec spec =
      ModelSpec::make(trainset.meta, cfg.representation, cfg.ablate_partner);
  const NoiseSchedule schedule = NoiseSchedule::make(cfg.schedule);

  DenoiserConfig dcfg;
  dcfg.channels = cfg.width;
  dcfg.heads = cfg.heads;
  dcfg.ff = cfg.ff;
  dcfg.blocks = cfg.blocks;
  dcfg.tokens = spec.tokens;
  dcfg.frames = spec.frames();
  dcfg.d_in = spec.d_in;
  dcfg.d_out = spec.d_out;

  CheckpointExtra extra;
  extra.representation = cfg.representation;
  extra.ablate_partner = cfg.ablate_partner;
  extra.joints = trainset.meta.joints;
  extra.obs = trainset.meta.obs;
  extra.fut = trainset.meta.fut;
  extra.schedule = cfg.schedule;
  extra.seed = cfg.seed;
  extra.epochs_total = cfg.epochs;
  extra.batch = cfg.batch;
  extra.lr = cfg.lr;

  core::AdamConfig acfg;
  acfg.lr = cfg.lr;

  Denoiser model(dcfg);
  core::Adam adam(acfg, model.params);
  int start_epoch = 0;
  std::vector<double> losses;

  if (cfg.resume) {
    LoadedCheckpoint ck = load_checkpoint(cfg.checkpoint_path + ".partial");
    if (!ck.has_optimizer)
      throw ConfigError(cfg.checkpoint_path + ".partial has no optimizer state to resume");
    model = model_from_checkpoint(ck);
    if (ck.cfg.channels != dcfg.channels || ck.cfg.heads != dcfg.heads ||
        ck.cfg.ff != dcfg.ff || ck.cfg.blocks != dcfg.blocks ||
        ck.cfg.tokens != dcfg.tokens || ck.cfg.frames != dcfg.frames ||
        ck.cfg.d_in != dcfg.d_in || ck.cfg.d_out != dcfg.d_out)
      throw ConfigError("resume architecture does not match the partial checkpoint");
    if (ck.extra.seed != cfg.seed || ck.extra.epochs_total != cfg.epochs ||
        ck.extra.batch != cfg.batch || ck.extra.representation != cfg.representation ||
        ck.extra.ablate_partner != cfg.ablate_partner)
      throw ConfigError("resume configuration does not match the partial checkpoint");
    adam = core::Adam(acfg, model.params);
    adam.restore(ck.adam_steps, std::move(ck.adam_m), std::move(ck.adam_v));
    start_epoch = ck.extra.epochs_done;
    losses = ck.extra.epoch_losses;
    if (log)
      (*log) << "resumed after epoch " << start_epoch << " from " << cfg.checkpoint_path
             << ".partial\n";
  } else {
    model.init_params(cfg.seed);
  }

  // Per-window features are fixed across epochs; encode them once.
  const std::int64_t N = static_cast<std::int64_t>(trainset.windows.size());
  std::vector<WindowFeatures> feats;
  feats.reserve(N);
  for (const auto& w : trainset.windows)
    feats.push_back(window_features(spec, w, trainset.meta.pelvis_index));

  const std::int64_t fut_n = spec.fut_floats();
  const std::int64_t in_n = static_cast<std::int64_t>(spec.tokens) * spec.frames() * spec.d_in;
  const int T = schedule.cfg.steps;
  const int last_epoch =
      cfg.stop_after > 0 ? std::min(cfg.epochs, start_epoch + cfg.stop_after) : cfg.epochs;

  std::vector<float> noisy(fut_n);
  for (int epoch = start_epoch + 1; epoch <= last_epoch; ++epoch) {
    std::vector<std::int64_t> order(N);
    for (std::int64_t i = 0; i < N; ++i) order[i] = i;
    core::RngStream shuffle(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch));
    for (std::int64_t i = N - 1; i > 0; --i) {
      std::int64_t j =
          static_cast<std::int64_t>(shuffle.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[i], order[j]);
    }
    core::RngStream t_draws(cfg.seed, "t", static_cast<std::uint64_t>(epoch));
    core::RngStream eps_draws(cfg.seed, "eps", static_cast<std::uint64_t>(epoch));

    const double lr_scale = lr_scale_for_epoch(epoch, cfg.epochs);
    double loss_sum = 0.0;
    for (std::int64_t at = 0; at < N; at += cfg.batch) {
      const std::int64_t b = std::min<std::int64_t>(cfg.batch, N - at);
      core::Tensor x = core::Tensor::zeros({b, spec.tokens, spec.frames(), spec.d_in});
      core::Tensor target = core::Tensor::zeros({b, spec.tokens, spec.fut, spec.d_out});
      std::vector<int> steps(b);
      for (std::int64_t i = 0; i < b; ++i) {
        const WindowFeatures& wf = feats[order[at + i]];
        const int t = 1 + static_cast<int>(t_draws.below(static_cast<std::uint64_t>(T)));
        steps[i] = t;
        float* eps = target.data() + i * fut_n;
        eps_draws.fill_normal({eps, static_cast<size_t>(fut_n)});
        if (!spec.all_valid) {
          // Padding lanes carry no signal; keep them exactly zero end to end.
          for (std::int64_t k = 0; k < fut_n; ++k)
            if (spec.valid[static_cast<size_t>(k / (spec.fut * spec.d_out)) * spec.d_out +
                           k % spec.d_out] == 0.0f)
              eps[k] = 0.0f;
        }
        schedule.noising(t, wf.fut.data(), eps, noisy.data(), fut_n);
        assemble_input(spec, wf, noisy.data(), x.data() + i * in_n);
      }

      core::Tape tape;
      core::Tensor out = model.forward(&tape, x, steps);
      core::Tensor fut =
          core::ops::slice_axis(&tape, out, 2, spec.obs, spec.frames());
      if (!spec.all_valid) {
        core::Tensor mask = core::Tensor::from(
            {spec.tokens, 1, spec.d_out},
            std::vector<float>(spec.valid.begin(), spec.valid.end()));
        fut = core::ops::mul(&tape, fut, mask);
      }
      core::Tensor loss = core::ops::mse(&tape, fut, target);
      tape.backward(loss);
      adam.step(model.params, tape, lr_scale);
      loss_sum += static_cast<double>(loss.data()[0]) * static_cast<double>(b);
    }
    const double mean_loss = loss_sum / static_cast<double>(N);
    losses.push_back(mean_loss);
    if (log)
      (*log) << "epoch " << epoch << "/" << cfg.epochs << " loss " << mean_loss << " lr "
             << cfg.lr * lr_scale << "\n";

    extra.epochs_done = epoch;
    extra.epoch_losses = losses;
    if (cfg.save_partial && !cfg.checkpoint_path.empty() && epoch < cfg.epochs)
      save_checkpoint(cfg.checkpoint_path + ".partial", model, extra, &adam);
  }

  TrainResult result{model, extra, losses};
  if (!cfg.checkpoint_path.empty() && extra.epochs_done == cfg.epochs) {
    save_checkpoint(cfg.checkpoint_path, model, extra, nullptr);
    std::remove((cfg.checkpoint_path + ".partial").c_str());
  }
  return result;
}

}  // namespace hhi::idd
