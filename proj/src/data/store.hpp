#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bvh/bvh.hpp"
#include "data/dataset.hpp"

namespace hhi::data {

// A dataset directory holds meta.json (shape, rig, provenance of the
// windowing), manifest.jsonl (one line per window), data.bin (float32
// little-endian positions, window-major: obs_cg, obs_cr, fut_cg, fut_cr)
// and, when angle features are present, angles.bin with the same layout.
struct DatasetMeta {
  int obs = 24;
  int fut = 24;
  int joints = 0;
  double fps = 24.0;
  int pelvis_index = 0;
  bool has_angles = false;
  int window_delay = 0;
  std::string delayed_agent = "none";  // "cg", "cr" or "none"
  bvh::SkeletonHierarchy skeleton;     // offsets in mm
};

struct Dataset {
  DatasetMeta meta;
  std::vector<InteractionWindow> windows;
};

void write_dataset(const std::string& dir, const DatasetMeta& meta,
                   const std::vector<InteractionWindow>& windows);
Dataset read_dataset(const std::string& dir);

// Materializes train/val/test subdirectories, routing each window by the
// split its participant pair landed in.
void write_split_datasets(const std::string& dir, const DatasetMeta& meta,
                          const std::vector<InteractionWindow>& windows,
                          const SplitResult& split);

// Predicted futures use the same directory scheme minus observations:
// data.bin holds fut_cg then fut_cr per window.
using PredictedWindow = std::pair<PoseSequence, PoseSequence>;  // cg, cr

void write_predictions(const std::string& dir, const DatasetMeta& meta,
                       const std::vector<InteractionWindow>& source,
                       const std::vector<PredictedWindow>& preds);
std::vector<PredictedWindow> read_predictions(const std::string& dir, DatasetMeta* meta_out);

}  // namespace hhi::data
