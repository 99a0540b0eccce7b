#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "data/store.hpp"
#include "idd/checkpoint.hpp"
#include "idd/denoiser.hpp"
#include "idd/schedule.hpp"

namespace hhi::idd {

struct SampleConfig {
  std::uint64_t seed = 0;
  int num_samples = 1;  // draws per window, averaged after decoding
  int batch = 64;
};

// Ancestral sampling of future frames conditioned on the observations.
// Noise streams are keyed per (window, draw), so predictions do not depend
// on batching and repeat runs reproduce them exactly.
std::vector<data::PredictedWindow> predict_windows(const Denoiser& model,
                                                   const CheckpointExtra& extra,
                                                   const data::Dataset& ds,
                                                   const SampleConfig& cfg,
                                                   std::ostream* log);

}  // namespace hhi::idd
