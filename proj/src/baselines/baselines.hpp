#pragma once

#include <string>
#include <utility>
#include <vector>

#include "data/pose.hpp"

namespace hhi::baselines {

enum class Kind { ZeroVelocity, ConstantVelocity };

Kind kind_from_name(const std::string& name);  // "zero-velocity" | "constant-velocity"
const char* kind_name(Kind k);

// Zero velocity repeats the last observed frame. Constant velocity
// extrapolates in float32 as last + (k+1) * (last - prev) for future frame k,
// evaluated in exactly that order so results are reproducible bit for bit.
data::PoseSequence predict_track(const data::PoseSequence& obs, int fut, Kind k);

std::pair<data::PoseSequence, data::PoseSequence> predict_window(
    const data::InteractionWindow& w, int fut, Kind k);

}  // namespace hhi::baselines
