#include "data/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace hhi::data {

namespace {

void copy_segment(const PoseSequence& src, std::int64_t from, std::int64_t count,
                  PoseSequence& dst) {
  dst.resize(count, src.joints);
  std::copy_n(src.frame(from), count * src.joints * 3, dst.xyz.begin());
}

void copy_segment(const AngleTrack& src, std::int64_t from, std::int64_t count,
                  AngleTrack& dst) {
  dst.resize(count, src.joints);
  std::copy_n(src.frame(from), count * src.width(), dst.feat.begin());
}

}  // namespace

std::vector<InteractionWindow> build_windows(const ClipPair& clip, const WindowSpec& spec) {
  if (spec.obs < 2 || spec.fut < 1)
    throw ConfigError("window needs at least 2 observed and 1 future frame");
  if (spec.stride < 1) throw ConfigError("window stride must be positive");
  if (spec.delay < 0) throw ConfigError("window delay must be non-negative");
  if (clip.cg.frames != clip.cr.frames)
    throw ConfigError("clip '" + clip.clip_id + "': agents have different frame counts");
  if (clip.cg.joints != clip.cr.joints)
    throw ConfigError("clip '" + clip.clip_id + "': agents have different joint counts");

  const std::int64_t len = clip.cg.frames;
  const std::int64_t span = spec.obs + spec.fut;
  std::vector<InteractionWindow> out;
  for (std::int64_t s = 0;; s += spec.stride) {
    // The delayed agent's observation ends at s + obs + delay; everything
    // else ends at s + obs + fut. Both must fit.
    std::int64_t need = std::max(span, static_cast<std::int64_t>(spec.obs + spec.delay));
    if (s + need > len) break;

    InteractionWindow w;
    std::int64_t obs_cg_from = s, obs_cr_from = s;
    if (spec.delay > 0) {
      (spec.delayed_agent == 0 ? obs_cg_from : obs_cr_from) += spec.delay;
    }
    copy_segment(clip.cg, obs_cg_from, spec.obs, w.obs_cg);
    copy_segment(clip.cr, obs_cr_from, spec.obs, w.obs_cr);
    copy_segment(clip.cg, s + spec.obs, spec.fut, w.fut_cg);
    copy_segment(clip.cr, s + spec.obs, spec.fut, w.fut_cr);
    if (clip.angles) {
      w.angles = std::make_shared<WindowAngles>();
      copy_segment(clip.angles->cg, obs_cg_from, spec.obs, w.angles->obs_cg);
      copy_segment(clip.angles->cr, obs_cr_from, spec.obs, w.angles->obs_cr);
      copy_segment(clip.angles->cg, s + spec.obs, spec.fut, w.angles->fut_cg);
      copy_segment(clip.angles->cr, s + spec.obs, spec.fut, w.angles->fut_cr);
    }
    w.meta.clip_id = clip.clip_id;
    w.meta.pair_id = clip.pair_id;
    w.meta.task_id = clip.task_id;
    w.meta.start = s;
    w.meta.delay = spec.delay;
    out.push_back(std::move(w));
  }
  return out;
}

SplitResult split_by_participant(const std::vector<std::int64_t>& pair_ids,
                                 const SplitRatios& ratios, std::uint64_t seed) {
  std::vector<std::int64_t> pairs = pair_ids;
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  const std::int64_t n = static_cast<std::int64_t>(pairs.size());
  if (n < 3)
    throw ConfigError("participant split needs at least 3 pairs, got " + std::to_string(n));
  double total = ratios.train + ratios.val + ratios.test;
  if (!(total > 0.0) || ratios.train <= 0.0 || ratios.val < 0.0 || ratios.test < 0.0)
    throw ConfigError("split ratios must be positive");

  core::RngStream rng(seed, "split/pairs");
  for (std::int64_t i = n - 1; i > 0; --i) {
    std::int64_t j = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(pairs[i], pairs[j]);
  }

  auto clamp = [](std::int64_t v, std::int64_t lo, std::int64_t hi) {
    return std::max(lo, std::min(hi, v));
  };
  std::int64_t n_train = clamp(
      static_cast<std::int64_t>(std::llround(n * ratios.train / total)), 1, n - 2);
  std::int64_t n_val = clamp(
      static_cast<std::int64_t>(std::llround(n * ratios.val / total)), 1, n - 1 - n_train);
  std::int64_t n_test = n - n_train - n_val;

  SplitResult r;
  r.train_pairs.assign(pairs.begin(), pairs.begin() + n_train);
  r.val_pairs.assign(pairs.begin() + n_train, pairs.begin() + n_train + n_val);
  r.test_pairs.assign(pairs.begin() + n_train + n_val, pairs.end());
  std::sort(r.train_pairs.begin(), r.train_pairs.end());
  std::sort(r.val_pairs.begin(), r.val_pairs.end());
  std::sort(r.test_pairs.begin(), r.test_pairs.end());
  (void)n_test;
  return r;
}

void Normalizer::apply(const float* in_mm, std::int64_t points, double* out) const {
  for (std::int64_t p = 0; p < points; ++p)
    for (int c = 0; c < 3; ++c)
      out[p * 3 + c] = (static_cast<double>(in_mm[p * 3 + c]) - offset_mm[c]) * scale;
}

void Normalizer::apply_f(const float* in_mm, std::int64_t points, float* out) const {
  for (std::int64_t p = 0; p < points; ++p)
    for (int c = 0; c < 3; ++c)
      out[p * 3 + c] = static_cast<float>(
          (static_cast<double>(in_mm[p * 3 + c]) - offset_mm[c]) * scale);
}

void Normalizer::invert(const double* in, std::int64_t points, float* out_mm) const {
  for (std::int64_t p = 0; p < points; ++p)
    for (int c = 0; c < 3; ++c)
      out_mm[p * 3 + c] = static_cast<float>(in[p * 3 + c] / scale + offset_mm[c]);
}

void Normalizer::invert_f(const float* in, std::int64_t points, float* out_mm) const {
  for (std::int64_t p = 0; p < points; ++p)
    for (int c = 0; c < 3; ++c)
      out_mm[p * 3 + c] = static_cast<float>(
          static_cast<double>(in[p * 3 + c]) / scale + offset_mm[c]);
}

Normalizer make_normalizer(const InteractionWindow& w, int pelvis_index) {
  if (pelvis_index < 0 || pelvis_index >= w.obs_cg.joints)
    throw ConfigError("pelvis index out of range");
  Normalizer n;
  const float* p = w.obs_cg.at(w.obs_cg.frames - 1, pelvis_index);
  for (int c = 0; c < 3; ++c) n.offset_mm[c] = static_cast<double>(p[c]);
  return n;
}

NormalizedWindow normalize_window(const InteractionWindow& w, int pelvis_index) {
  NormalizedWindow n;
  n.norm = make_normalizer(w, pelvis_index);
  n.obs = w.obs_cg.frames;
  n.fut = w.fut_cg.frames;
  n.joints = w.obs_cg.joints;
  auto run = [&](const PoseSequence& src, std::vector<double>& dst) {
    dst.resize(static_cast<size_t>(src.frames) * src.joints * 3);
    n.norm.apply(src.xyz.data(), src.frames * src.joints, dst.data());
  };
  run(w.obs_cg, n.obs_cg);
  run(w.obs_cr, n.obs_cr);
  run(w.fut_cg, n.fut_cg);
  run(w.fut_cr, n.fut_cr);
  return n;
}

void denormalize_window(const NormalizedWindow& n, InteractionWindow& out) {
  auto run = [&](const std::vector<double>& src, std::int64_t frames, PoseSequence& dst) {
    dst.resize(frames, n.joints);
    n.norm.invert(src.data(), frames * n.joints, dst.xyz.data());
  };
  run(n.obs_cg, n.obs, out.obs_cg);
  run(n.obs_cr, n.obs, out.obs_cr);
  run(n.fut_cg, n.fut, out.fut_cg);
  run(n.fut_cr, n.fut, out.fut_cr);
}

}  // namespace hhi::data
