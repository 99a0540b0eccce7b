#include "idd/features.hpp"

#include <cstring>

#include "core/errors.hpp"
#include "kin/kinematics.hpp"

namespace hhi::idd {

ModelSpec ModelSpec::make(const data::DatasetMeta& meta, const std::string& representation,
                          bool ablate_partner) {
  ModelSpec s;
  s.representation = representation;
  s.joints = meta.joints;
  s.obs = meta.obs;
  s.fut = meta.fut;
  s.ablate_partner = ablate_partner;
  if (representation == "position") {
    s.tokens = 2 * meta.joints;
    s.d_out = 3;
  } else if (representation == "angle") {
    s.tokens = 2 * (meta.joints + 1);
    s.d_out = 9;
  } else {
    throw ConfigError("unknown representation '" + representation +
                      "' (expected position or angle)");
  }
  s.d_in = s.d_out + 1;
  s.valid.assign(static_cast<size_t>(s.tokens) * s.d_out, 1.0f);
  if (representation == "angle") {
    // Token 0 of each agent carries the root translation in lanes 0..2.
    for (int agent = 0; agent < 2; ++agent) {
      float* v = s.valid.data() + static_cast<size_t>(agent * (s.joints + 1)) * s.d_out;
      for (int c = 3; c < s.d_out; ++c) v[c] = 0.0f;
    }
    s.all_valid = false;
  }
  return s;
}

namespace {

// Fills feats[token][frame][d_out] for one agent from one segment.
void encode_positions(const ModelSpec& spec, const data::Normalizer& norm,
                      const data::PoseSequence& seg, int agent, int frames, float* feats) {
  std::vector<float> m(3);
  for (int f = 0; f < frames; ++f) {
    for (int j = 0; j < spec.joints; ++j) {
      norm.apply_f(seg.at(f, j), 1, m.data());
      int tok = agent * spec.joints + j;
      float* dst = feats + (static_cast<std::int64_t>(tok) * frames + f) * spec.d_out;
      dst[0] = m[0];
      dst[1] = m[1];
      dst[2] = m[2];
    }
  }
}

void encode_angles(const ModelSpec& spec, const data::Normalizer& norm,
                   const data::AngleTrack& seg, int agent, int frames, float* feats) {
  const int per_agent = spec.joints + 1;
  std::vector<float> m(3);
  for (int f = 0; f < frames; ++f) {
    const float* row = seg.frame(f);
    int root_tok = agent * per_agent;
    float* root = feats + (static_cast<std::int64_t>(root_tok) * frames + f) * spec.d_out;
    norm.apply_f(row, 1, m.data());
    root[0] = m[0];
    root[1] = m[1];
    root[2] = m[2];
    for (int c = 3; c < spec.d_out; ++c) root[c] = 0.0f;
    for (int j = 0; j < spec.joints; ++j) {
      int tok = agent * per_agent + 1 + j;
      float* dst = feats + (static_cast<std::int64_t>(tok) * frames + f) * spec.d_out;
      std::memcpy(dst, row + 3 + 9 * j, 9 * sizeof(float));
    }
  }
}

}  // namespace

WindowFeatures window_features(const ModelSpec& spec, const data::InteractionWindow& w,
                               int pelvis_index) {
  WindowFeatures out;
  out.norm = data::make_normalizer(w, pelvis_index);
  out.obs.assign(static_cast<size_t>(spec.tokens) * spec.obs * spec.d_out, 0.0f);
  out.fut.assign(static_cast<size_t>(spec.tokens) * spec.fut * spec.d_out, 0.0f);
  if (spec.representation == "position") {
    encode_positions(spec, out.norm, w.obs_cg, 0, spec.obs, out.obs.data());
    encode_positions(spec, out.norm, w.obs_cr, 1, spec.obs, out.obs.data());
    encode_positions(spec, out.norm, w.fut_cg, 0, spec.fut, out.fut.data());
    encode_positions(spec, out.norm, w.fut_cr, 1, spec.fut, out.fut.data());
  } else {
    if (!w.angles)
      throw ConfigError("angle representation requested but the window has no angle track");
    encode_angles(spec, out.norm, w.angles->obs_cg, 0, spec.obs, out.obs.data());
    encode_angles(spec, out.norm, w.angles->obs_cr, 1, spec.obs, out.obs.data());
    encode_angles(spec, out.norm, w.angles->fut_cg, 0, spec.fut, out.fut.data());
    encode_angles(spec, out.norm, w.angles->fut_cr, 1, spec.fut, out.fut.data());
  }
  return out;
}

void assemble_input(const ModelSpec& spec, const WindowFeatures& feats,
                    const float* noisy_fut, float* out) {
  const int L = spec.frames();
  const int cg_tokens = spec.tokens / 2;
  for (int tok = 0; tok < spec.tokens; ++tok) {
    const bool drop = spec.ablate_partner && tok < cg_tokens;
    for (int f = 0; f < L; ++f) {
      float* dst = out + (static_cast<std::int64_t>(tok) * L + f) * spec.d_in;
      if (f < spec.obs) {
        const float* src =
            feats.obs.data() + (static_cast<std::int64_t>(tok) * spec.obs + f) * spec.d_out;
        if (drop) {
          std::memset(dst, 0, spec.d_in * sizeof(float));
        } else {
          std::memcpy(dst, src, spec.d_out * sizeof(float));
          dst[spec.d_out] = 1.0f;
        }
      } else {
        const float* src = noisy_fut + (static_cast<std::int64_t>(tok) * spec.fut +
                                        (f - spec.obs)) *
                                           spec.d_out;
        std::memcpy(dst, src, spec.d_out * sizeof(float));
        dst[spec.d_out] = 0.0f;
      }
    }
  }
}

std::pair<data::PoseSequence, data::PoseSequence> decode_future(
    const ModelSpec& spec, const data::DatasetMeta& meta, const data::Normalizer& norm,
    const float* fut_feats) {
  std::pair<data::PoseSequence, data::PoseSequence> out;
  out.first.resize(spec.fut, spec.joints);
  out.second.resize(spec.fut, spec.joints);
  if (spec.representation == "position") {
    for (int agent = 0; agent < 2; ++agent) {
      data::PoseSequence& pose = agent == 0 ? out.first : out.second;
      for (int j = 0; j < spec.joints; ++j) {
        int tok = agent * spec.joints + j;
        for (int f = 0; f < spec.fut; ++f) {
          const float* src =
              fut_feats + (static_cast<std::int64_t>(tok) * spec.fut + f) * spec.d_out;
          norm.invert_f(src, 1, pose.at(f, j));
        }
      }
    }
    return out;
  }

  // Angle mode: rebuild each frame's rotations, snap them back onto SO(3)
  // and run forward kinematics over the stored rig.
  const int per_agent = spec.joints + 1;
  std::vector<double> xyz(static_cast<size_t>(spec.joints) * 3);
  for (int agent = 0; agent < 2; ++agent) {
    data::PoseSequence& pose = agent == 0 ? out.first : out.second;
    for (int f = 0; f < spec.fut; ++f) {
      kin::JointAngleFrame frame;
      frame.rot.resize(spec.joints);
      const float* root =
          fut_feats +
          (static_cast<std::int64_t>(agent * per_agent) * spec.fut + f) * spec.d_out;
      float root_mm[3];
      norm.invert_f(root, 1, root_mm);
      for (int c = 0; c < 3; ++c) frame.root_pos[c] = static_cast<double>(root_mm[c]);
      for (int j = 0; j < spec.joints; ++j) {
        int tok = agent * per_agent + 1 + j;
        const float* r =
            fut_feats + (static_cast<std::int64_t>(tok) * spec.fut + f) * spec.d_out;
        kin::Mat3 m;
        for (int k = 0; k < 9; ++k) m[k] = static_cast<double>(r[k]);
        frame.rot[j] = kin::project_to_so3(m);
      }
      kin::forward_kinematics(meta.skeleton, frame, 1.0, xyz.data());
      float* dst = pose.frame(f);
      for (int i = 0; i < spec.joints * 3; ++i) dst[i] = static_cast<float>(xyz[i]);
    }
  }
  return out;
}

}  // namespace hhi::idd
