#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace hhi::data {

// Joint positions over time, row-major [frames x joints x 3], millimetres.
struct PoseSequence {
  std::int64_t frames = 0;
  int joints = 0;
  std::vector<float> xyz;

  void resize(std::int64_t f, int j) {
    frames = f;
    joints = j;
    xyz.assign(static_cast<size_t>(f) * static_cast<size_t>(j) * 3, 0.0f);
  }
  float* frame(std::int64_t t) { return xyz.data() + t * joints * 3; }
  const float* frame(std::int64_t t) const { return xyz.data() + t * joints * 3; }
  float* at(std::int64_t t, int j) { return xyz.data() + (t * joints + j) * 3; }
  const float* at(std::int64_t t, int j) const { return xyz.data() + (t * joints + j) * 3; }
};

// Joint-angle features over time: per frame, root position (3) followed by
// a row-major 3x3 rotation per joint. Millimetres and unitless entries.
struct AngleTrack {
  std::int64_t frames = 0;
  int joints = 0;
  std::vector<float> feat;

  int width() const { return 3 + 9 * joints; }
  void resize(std::int64_t f, int j) {
    frames = f;
    joints = j;
    feat.assign(static_cast<size_t>(f) * static_cast<size_t>(width()), 0.0f);
  }
  float* frame(std::int64_t t) { return feat.data() + t * width(); }
  const float* frame(std::int64_t t) const { return feat.data() + t * width(); }
};

struct WindowAngles {
  AngleTrack obs_cg, obs_cr, fut_cg, fut_cr;
};

struct WindowMeta {
  std::string clip_id;
  std::int64_t pair_id = 0;
  std::int64_t task_id = 0;
  std::int64_t start = 0;  // first observed frame in the source clip
  int delay = 0;           // frames the delayed agent's observation is shifted forward
};

// One training/evaluation example: observed and future segments for the
// caregiver (cg) and care receiver (cr). Angle features tag along when the
// source provides them; position data is always present.
struct InteractionWindow {
  PoseSequence obs_cg, obs_cr, fut_cg, fut_cr;
  WindowMeta meta;
  std::shared_ptr<WindowAngles> angles;

  bool has_angles() const { return angles != nullptr; }
};

}  // namespace hhi::data
