#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/adam.hpp"
#include "idd/denoiser.hpp"
#include "idd/schedule.hpp"

namespace hhi::idd {

// Everything a checkpoint carries besides the architecture and weights:
// what the model was trained on and how far training got.
struct CheckpointExtra {
  std::string representation = "position";
  bool ablate_partner = false;
  int joints = 0;
  int obs = 0, fut = 0;
  ScheduleConfig schedule;

  std::uint64_t seed = 0;
  int epochs_done = 0;
  int epochs_total = 0;
  int batch = 0;
  double lr = 1e-3;
  std::vector<double> epoch_losses;
};

// Binary layout: "IDD1", u32 little-endian JSON header length, the header,
// then raw float32 parameter blocks in header order, then (partial
// checkpoints only) Adam first/second moments in the same order.
void save_checkpoint(const std::string& path, const Denoiser& model,
                     const CheckpointExtra& extra, const core::Adam* optimizer);

struct LoadedCheckpoint {
  DenoiserConfig cfg;
  CheckpointExtra extra;
  std::vector<std::string> param_names;
  std::vector<std::vector<float>> param_values;
  bool has_optimizer = false;
  std::int64_t adam_steps = 0;
  std::vector<std::vector<float>> adam_m, adam_v;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Builds the model and copies the stored weights in; names and shapes must
// match the architecture exactly.
Denoiser model_from_checkpoint(const LoadedCheckpoint& ck);

}  // namespace hhi::idd
