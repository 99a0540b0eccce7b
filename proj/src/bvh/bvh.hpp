#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace hhi::bvh {

enum class Channel { Xpos, Ypos, Zpos, Xrot, Yrot, Zrot };

const char* channel_name(Channel c);

struct Joint {
  std::string name;
  int parent = -1;  // -1 marks the root
  std::array<double, 3> offset{};
  std::vector<Channel> channels;
  bool has_end_site = false;
  std::array<double, 3> end_site{};
  // First index of this joint's channels within a motion row.
  int channel_offset = 0;
};

// Joints in declaration order; parents always precede children.
struct SkeletonHierarchy {
  std::vector<Joint> joints;
  int total_channels = 0;

  int joint_count() const { return static_cast<int>(joints.size()); }
  int index_of(const std::string& name) const;  // -1 if absent
};

struct MotionClip {
  double frame_time = 0.0;
  std::int64_t frames = 0;
  int channels = 0;
  std::vector<double> data;  // [frames x channels] row-major

  double fps() const { return 1.0 / frame_time; }
  const double* row(std::int64_t f) const { return data.data() + f * channels; }
  double* row(std::int64_t f) { return data.data() + f * channels; }
};

struct BvhFile {
  SkeletonHierarchy skeleton;
  MotionClip motion;
};

// Recursive-descent parse. Errors carry the 1-based line number of the
// offending token. The declared frame count must match the data exactly.
BvhFile parse_bvh_text(const std::string& text, const std::string& origin);
BvhFile parse_bvh(const std::string& path);

std::string write_bvh_text(const SkeletonHierarchy& skeleton, const MotionClip& motion);
void write_bvh(const std::string& path, const SkeletonHierarchy& skeleton,
               const MotionClip& motion);

// Decimation to an integer stride; anything else is refused rather than
// interpolated, so resampled frames stay bit-faithful to source frames.
MotionClip resample(const MotionClip& clip, double target_fps);

}  // namespace hhi::bvh
