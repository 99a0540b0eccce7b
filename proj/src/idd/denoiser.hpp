#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/nn.hpp"
#include "core/ops.hpp"

namespace hhi::idd {

struct DenoiserConfig {
  int channels = 64;
  int heads = 4;
  int ff = 64;
  int blocks = 4;
  int step_dim = 128;  // sinusoidal width fed to the step-embedding MLP
  int tokens = 0;      // K: joints (and root slots in angle mode) x 2 agents
  int frames = 0;      // L: observed + future
  int d_in = 0;
  int d_out = 0;
};

// Transformer denoiser over a [tokens x frames] grid: per-token feature
// embedding plus temporal and joint encodings, then residual blocks that
// attend along time (per token) and across tokens (per frame), with the
// diffusion step embedding injected at every block input. Block outputs
// are summed and decoded by a zero-initialized linear layer, so a freshly
// initialized model predicts exactly zero noise.
template <class T>
struct DenoiserT {
  DenoiserConfig cfg;
  core::ParamStoreT<T> params;
  core::TensorT<T> time_pe;  // [frames, channels], fixed

  struct Block {
    core::TensorT<T> ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
    core::ops::MhaWeightsT<T> att_time, att_joint;
    core::TensorT<T> ff1_w, ff1_b, ff2_w, ff2_b;
  };
  core::TensorT<T> embed_w, embed_b;
  core::TensorT<T> joint_emb;  // [tokens, 1, channels]
  core::TensorT<T> step1_w, step1_b, step2_w, step2_b;
  core::TensorT<T> dec_w, dec_b;
  std::vector<Block> blocks;

  explicit DenoiserT(const DenoiserConfig& cfg);

  // Draws fresh parameters; streams are keyed by parameter name, so values
  // do not depend on registration order.
  void init_params(std::uint64_t seed);

  // Same weights, different scalar type (used for finite-difference twins).
  template <class U>
  DenoiserT<U> cast() const;

  // x: [batch, tokens, frames, d_in]; t_steps: diffusion step per sample.
  // Returns predicted noise [batch, tokens, frames, d_out].
  core::TensorT<T> forward(core::TapeT<T>* tape, const core::TensorT<T>& x,
                           const std::vector<int>& t_steps) const;
};

using Denoiser = DenoiserT<float>;

template <class T>
template <class U>
DenoiserT<U> DenoiserT<T>::cast() const {
  DenoiserT<U> out(cfg);
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& src = params.tensors[i];
    auto& dst = out.params.tensors[i];
    for (std::int64_t k = 0; k < src.numel(); ++k)
      dst.data()[k] = static_cast<U>(src.data()[k]);
  }
  for (std::int64_t k = 0; k < time_pe.numel(); ++k)
    out.time_pe.data()[k] = static_cast<U>(time_pe.data()[k]);
  return out;
}

}  // namespace hhi::idd
