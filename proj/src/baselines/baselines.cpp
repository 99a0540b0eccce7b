#include "baselines/baselines.hpp"

#include "core/errors.hpp"

namespace hhi::baselines {

Kind kind_from_name(const std::string& name) {
  if (name == "zero-velocity") return Kind::ZeroVelocity;
  if (name == "constant-velocity") return Kind::ConstantVelocity;
  throw ConfigError("unknown baseline '" + name +
                    "' (expected zero-velocity or constant-velocity)");
}

const char* kind_name(Kind k) {
  return k == Kind::ZeroVelocity ? "zero-velocity" : "constant-velocity";
}

data::PoseSequence predict_track(const data::PoseSequence& obs, int fut, Kind k) {
  if (obs.frames < 2) throw ConfigError("baselines need at least 2 observed frames");
  data::PoseSequence out;
  out.resize(fut, obs.joints);
  const int n = obs.joints * 3;
  const float* last = obs.frame(obs.frames - 1);
  const float* prev = obs.frame(obs.frames - 2);
  for (int f = 0; f < fut; ++f) {
    float* dst = out.frame(f);
    if (k == Kind::ZeroVelocity) {
      for (int i = 0; i < n; ++i) dst[i] = last[i];
    } else {
      const float step = static_cast<float>(f + 1);
      for (int i = 0; i < n; ++i) dst[i] = last[i] + step * (last[i] - prev[i]);
    }
  }
  return out;
}

std::pair<data::PoseSequence, data::PoseSequence> predict_window(
    const data::InteractionWindow& w, int fut, Kind k) {
  return {predict_track(w.obs_cg, fut, k), predict_track(w.obs_cr, fut, k)};
}

}  // namespace hhi::baselines
