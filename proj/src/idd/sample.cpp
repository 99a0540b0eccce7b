#include "idd/sample.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "idd/features.hpp"

namespace hhi::idd {

std::vector<data::PredictedWindow> predict_windows(const Denoiser& model,
                                                   const CheckpointExtra& extra,
                                                   const data::Dataset& ds,
                                                   const SampleConfig& cfg,
                                                   std::ostream* log) {
  if (cfg.num_samples < 1) throw ConfigError("num_samples must be positive");
  if (extra.joints != ds.meta.joints || extra.obs != ds.meta.obs || extra.fut != ds.meta.fut)
    throw ConfigError("checkpoint was trained on a different window shape than this dataset");

  const ModelSpec spec =
      ModelSpec::make(ds.meta, extra.representation, extra.ablate_partner);
  if (spec.tokens != model.cfg.tokens || spec.frames() != model.cfg.frames ||
      spec.d_in != model.cfg.d_in || spec.d_out != model.cfg.d_out)
    throw ConfigError("checkpoint architecture does not match this dataset");
  const NoiseSchedule schedule = NoiseSchedule::make(extra.schedule);

  const std::int64_t N = static_cast<std::int64_t>(ds.windows.size());
  const std::int64_t S = cfg.num_samples;
  const std::int64_t fut_n = spec.fut_floats();
  const std::int64_t in_n =
      static_cast<std::int64_t>(spec.tokens) * spec.frames() * spec.d_in;
  const int T = schedule.cfg.steps;

  auto zero_invalid = [&](float* buf) {
    if (spec.all_valid) return;
    for (std::int64_t k = 0; k < fut_n; ++k)
      if (spec.valid[static_cast<size_t>(k / (spec.fut * spec.d_out)) * spec.d_out +
                     k % spec.d_out] == 0.0f)
        buf[k] = 0.0f;
  };

  std::vector<data::PredictedWindow> preds(N);
  std::vector<double> accum;  // running sum of decoded positions per window
  const std::int64_t pose_n = static_cast<std::int64_t>(spec.fut) * spec.joints * 3;

  for (std::int64_t first = 0; first < N * S; first += cfg.batch) {
    const std::int64_t b = std::min<std::int64_t>(cfg.batch, N * S - first);

    std::vector<WindowFeatures> feats(b);
    std::vector<core::RngStream> streams;
    streams.reserve(b);
    std::vector<std::vector<float>> state(b);
    for (std::int64_t i = 0; i < b; ++i) {
      const std::int64_t w = (first + i) / S;
      feats[i] = window_features(spec, ds.windows[w], ds.meta.pelvis_index);
      streams.emplace_back(cfg.seed, "ancestral", static_cast<std::uint64_t>(first + i));
      state[i].resize(fut_n);
      streams[i].fill_normal({state[i].data(), static_cast<size_t>(fut_n)});
      zero_invalid(state[i].data());
    }

    std::vector<int> steps(b);
    std::vector<float> eps_hat(fut_n), z(fut_n);
    for (int t = T; t >= 1; --t) {
      core::Tensor x = core::Tensor::zeros({b, spec.tokens, spec.frames(), spec.d_in});
      for (std::int64_t i = 0; i < b; ++i) {
        assemble_input(spec, feats[i], state[i].data(), x.data() + i * in_n);
        steps[i] = t;
      }
      core::Tensor out = model.forward(nullptr, x, steps);
      const std::int64_t L = spec.frames();
      for (std::int64_t i = 0; i < b; ++i) {
        // Pull the future slice of this sample out of [b, K, L, d_out].
        for (int k = 0; k < spec.tokens; ++k) {
          const float* src =
              out.data() + ((i * spec.tokens + k) * L + spec.obs) * spec.d_out;
          std::copy_n(src, static_cast<size_t>(spec.fut) * spec.d_out,
                      eps_hat.data() + static_cast<std::int64_t>(k) * spec.fut * spec.d_out);
        }
        if (t > 1) {
          streams[i].fill_normal({z.data(), static_cast<size_t>(fut_n)});
          zero_invalid(z.data());
        }
        schedule.ancestral_step(t, state[i].data(), eps_hat.data(), z.data(),
                                state[i].data(), fut_n);
        zero_invalid(state[i].data());
      }
    }

    if (accum.empty()) accum.assign(static_cast<size_t>(N) * 2 * pose_n, 0.0);
    for (std::int64_t i = 0; i < b; ++i) {
      const std::int64_t w = (first + i) / S;
      auto decoded = decode_future(spec, ds.meta, feats[i].norm, state[i].data());
      double* acc = accum.data() + w * 2 * pose_n;
      for (std::int64_t k = 0; k < pose_n; ++k) {
        acc[k] += static_cast<double>(decoded.first.xyz[k]);
        acc[pose_n + k] += static_cast<double>(decoded.second.xyz[k]);
      }
    }
    if (log)
      (*log) << "sampled " << std::min(N * S, first + b) << "/" << N * S << " draws\n";
  }

  for (std::int64_t w = 0; w < N; ++w) {
    preds[w].first.resize(spec.fut, spec.joints);
    preds[w].second.resize(spec.fut, spec.joints);
    const double* acc = accum.data() + w * 2 * pose_n;
    for (std::int64_t k = 0; k < pose_n; ++k) {
      preds[w].first.xyz[k] = static_cast<float>(acc[k] / static_cast<double>(S));
      preds[w].second.xyz[k] = static_cast<float>(acc[pose_n + k] / static_cast<double>(S));
    }
  }
  return preds;
}

}  // namespace hhi::idd
