#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "core/adam.hpp"
#include "data/store.hpp"
#include "idd/checkpoint.hpp"
#include "idd/denoiser.hpp"
#include "idd/schedule.hpp"

namespace hhi::idd {

struct TrainConfig {
  int epochs = 50;
  int batch = 32;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  int width = 64;
  int heads = 4;
  int ff = 64;
  int blocks = 4;
  ScheduleConfig schedule;
  std::string representation = "position";
  bool ablate_partner = false;
  std::string checkpoint_path;
  bool resume = false;     // pick up from <checkpoint_path>.partial
  int stop_after = 0;      // stop once this many epochs are done (0 = run all);
                           // the partial checkpoint lets a later run resume
  bool save_partial = true;
};

struct TrainResult {
  Denoiser model;
  CheckpointExtra extra;
  std::vector<double> epoch_losses;
};

// Epsilon-prediction training over a window dataset. Shuffling, step and
// noise draws are keyed by (seed, epoch), so a resumed run replays exactly
// the trajectory the uninterrupted run would have taken.
TrainResult train_model(const data::Dataset& trainset, const TrainConfig& cfg,
                        std::ostream* log);

// Learning-rate plateaus: full rate, then 0.1x after 75% of the epochs,
// then 0.01x after 90%.
double lr_scale_for_epoch(int epoch, int total_epochs);

}  // namespace hhi::idd
