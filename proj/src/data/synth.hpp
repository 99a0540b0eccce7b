#pragma once

#include <cstdint>
#include <vector>

#include "bvh/bvh.hpp"
#include "data/dataset.hpp"

namespace hhi::data {

// Two-agent synthetic mocap. The leader (cg) follows a closed-form sum of
// slow sinusoids per channel; the follower (cr) is a one-pole lowpass of the
// leader's channels applied with a fixed lag, plus small Gaussian jitter.
// The follower's future therefore depends on the leader's recent past over
// and above its own history, which is the structure the model is meant to
// exploit.
struct SynthConfig {
  std::uint64_t seed = 0;
  int clips = 20;
  std::int64_t clip_len = 312;  // frames
  double fps = 24.0;
  int delay = 6;        // follower lag, frames
  double noise = 2.0;   // jitter std: degrees on rotations, mm on root position
  double smoothing = 0.15;  // lowpass coefficient (weight on the new sample)
};

struct SynthClip {
  bvh::SkeletonHierarchy skeleton;
  bvh::MotionClip motion_cg, motion_cr;
  ClipPair pair;  // FK positions in mm plus angle features
};

// The fixed five-joint rig all synthetic clips share (offsets in mm).
bvh::SkeletonHierarchy synth_skeleton();

SynthClip synth_clip(const SynthConfig& cfg, int clip_index);
std::vector<ClipPair> synth_corpus(const SynthConfig& cfg);

// Ridge-regression probe of the leader->follower coupling: predicts the
// follower's last future frame from its own recent observations, then again
// with the leader's recent observations added, and reports held-out R^2 for
// both. Coupled data shows a clear gain for the joint model.
struct CouplingProbe {
  double r2_own = 0.0;
  double r2_joint = 0.0;
};

CouplingProbe probe_coupling(const std::vector<InteractionWindow>& windows, int pelvis_index);

}  // namespace hhi::data
