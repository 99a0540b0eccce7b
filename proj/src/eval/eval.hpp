#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bvh/bvh.hpp"
#include "data/store.hpp"

namespace hhi::eval {

// Future-frame horizons reported in the tables. Frames are 1-based offsets
// into the predicted segment, rounded from milliseconds at the dataset rate
// and clamped to the horizon length.
struct HorizonSpec {
  std::vector<int> ms;
  std::vector<int> frames;
};

HorizonSpec default_horizons(double fps, int fut);

// Mean per-joint position error of one frame in millimetres. Both poses are
// translated so their pelvis sits at the origin before joints are compared;
// the pelvis itself is skipped unless include_pelvis is set.
double mpjpe_frame(const float* pred, const float* gt, int joints, int pelvis_index,
                   bool include_pelvis);

struct ReportRow {
  std::string agent;    // "cg" | "cr"
  int horizon_ms = 0;   // -1 marks the average-over-all-frames row
  int frame = 0;        // 1-based future frame; 0 on the average row
  double mpjpe_mm = 0.0;
  std::int64_t windows = 0;
};

struct EvalReport {
  double fps = 0.0;
  int fut = 0;
  std::vector<ReportRow> rows;
};

EvalReport evaluate(const std::vector<data::InteractionWindow>& gt,
                    const std::vector<data::PredictedWindow>& preds, int pelvis_index,
                    bool include_pelvis, double fps);

// Convenience lookup; horizon_ms = -1 fetches the average row.
double report_value(const EvalReport& r, const std::string& agent, int horizon_ms);

void write_report_csv(const std::string& path, const EvalReport& report);

// Bone-length drift of predicted poses against the rig's rest lengths,
// averaged over windows and both agents: one row per (link, future frame).
struct LinkChangeRow {
  std::string link;  // named by the child joint
  int frame = 0;     // 1-based future frame
  double abs_change_mm = 0.0;
};

std::vector<LinkChangeRow> link_length_report(const bvh::SkeletonHierarchy& sk,
                                              const std::vector<data::PredictedWindow>& preds);
double mean_abs_link_change(const std::vector<LinkChangeRow>& rows);
void write_link_csv(const std::string& path, const std::vector<LinkChangeRow>& rows);

}  // namespace hhi::eval
