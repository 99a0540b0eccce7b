#pragma once

#include <string>
#include <utility>
#include <vector>

#include "data/dataset.hpp"
#include "data/store.hpp"

namespace hhi::idd {

// Maps windows onto the token grid the denoiser consumes. Tokens are one
// per joint per agent (position mode, features xyz) or one per joint plus a
// root-translation token per agent (angle mode, features a flattened 3x3
// rotation, root translation zero-padded to the same width). The network
// input appends a conditioning mask channel: 1 on observed frames, 0 on
// frames being denoised.
struct ModelSpec {
  std::string representation = "position";  // "position" | "angle"
  int joints = 0;
  int obs = 0, fut = 0;
  int tokens = 0;
  int d_in = 0, d_out = 0;
  bool ablate_partner = false;
  // Per-token feature validity [tokens * d_out]: zero marks the padding
  // lanes of root-translation tokens in angle mode.
  std::vector<float> valid;
  bool all_valid = true;

  int frames() const { return obs + fut; }
  std::int64_t fut_floats() const {
    return static_cast<std::int64_t>(tokens) * fut * d_out;
  }

  static ModelSpec make(const data::DatasetMeta& meta, const std::string& representation,
                        bool ablate_partner);
};

// Normalized per-window features: clean observed values and clean future
// targets, both [tokens * frames * d_out] in token-major order.
struct WindowFeatures {
  data::Normalizer norm;
  std::vector<float> obs;  // [tokens * spec.obs * d_out]
  std::vector<float> fut;  // [tokens * spec.fut * d_out]
};

WindowFeatures window_features(const ModelSpec& spec, const data::InteractionWindow& w,
                               int pelvis_index);

// Builds one sample of network input [tokens * frames * d_in] from clean
// observations and the current noisy future. Handles the mask channel and
// partner ablation (caregiver observations zeroed, mask dropped to 0).
void assemble_input(const ModelSpec& spec, const WindowFeatures& feats,
                    const float* noisy_fut, float* out);

// Decodes sampled future features back to millimetre joint positions for
// both agents. Angle mode re-orthonormalizes each predicted rotation and
// runs forward kinematics over the dataset's rig.
std::pair<data::PoseSequence, data::PoseSequence> decode_future(
    const ModelSpec& spec, const data::DatasetMeta& meta, const data::Normalizer& norm,
    const float* fut_feats);

}  // namespace hhi::idd
