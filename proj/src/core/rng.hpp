#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace hhi::core {

// Counter-based generator. A stream is keyed by (seed, label, index); the
// i-th output depends only on the key and i, so independent consumers can
// derive their own streams without sharing state and a run is reproducible
// no matter how work is batched or resumed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform in (0, 1], safe as a log() argument.
  double uniform_pos();
  // Standard normal via Box-Muller; pairs are cached for determinism.
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  void fill_normal(std::span<float> out, float mean = 0.0f, float stddev = 1.0f);
  void fill_uniform(std::span<float> out, float lo, float hi);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Derives a child seed from (seed, label, index). RngStream uses this for
// its key; exposed so sub-seeds can be reported or persisted.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

}  // namespace hhi::core
