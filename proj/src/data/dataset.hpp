#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "data/pose.hpp"

namespace hhi::data {

// Angle features for a whole clip, one track per agent.
struct ClipAngles {
  AngleTrack cg, cr;
};

// A time-aligned recording of two interacting agents.
struct ClipPair {
  std::string clip_id;
  std::int64_t pair_id = 0;
  std::int64_t task_id = 0;
  PoseSequence cg, cr;
  std::shared_ptr<ClipAngles> angles;
};

struct WindowSpec {
  int obs = 24;
  int fut = 24;
  int stride = 1;
  // When delay > 0, the named agent's observed segment is taken `delay`
  // frames later than the other agent's, so its observation window extends
  // closer to (or into) the prediction horizon. Futures stay aligned.
  int delay = 0;
  // 0 = cg, 1 = cr. Only consulted when delay > 0.
  int delayed_agent = 0;
};

// Slices a clip pair into overlapping windows. Starts that would run past
// the end of the clip (including the shifted observation) are dropped.
std::vector<InteractionWindow> build_windows(const ClipPair& clip, const WindowSpec& spec);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SplitResult {
  std::vector<std::int64_t> train_pairs, val_pairs, test_pairs;
};

// Assigns whole participant pairs to train/val/test so no pair leaks across
// splits. Deterministic for a given seed. Requires at least three pairs.
SplitResult split_by_participant(const std::vector<std::int64_t>& pair_ids,
                                 const SplitRatios& ratios, std::uint64_t seed);

// Rigid normalization for one window: translate so the caregiver's pelvis at
// the last observed frame sits at the origin, then scale millimetres to
// metres. Offset and arithmetic are kept in double so the inverse reproduces
// the original float32 coordinates bit for bit.
struct Normalizer {
  std::array<double, 3> offset_mm{0.0, 0.0, 0.0};
  double scale = 1e-3;

  void apply(const float* in_mm, std::int64_t points, double* out) const;
  void apply_f(const float* in_mm, std::int64_t points, float* out) const;
  void invert(const double* in, std::int64_t points, float* out_mm) const;
  void invert_f(const float* in, std::int64_t points, float* out_mm) const;
};

Normalizer make_normalizer(const InteractionWindow& w, int pelvis_index);

// Whole-window normalization round trip, used by tests and the store layer.
struct NormalizedWindow {
  Normalizer norm;
  std::int64_t obs = 0, fut = 0;
  int joints = 0;
  std::vector<double> obs_cg, obs_cr, fut_cg, fut_cr;
};

NormalizedWindow normalize_window(const InteractionWindow& w, int pelvis_index);
void denormalize_window(const NormalizedWindow& n, InteractionWindow& out);

}  // namespace hhi::data
