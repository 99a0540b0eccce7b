#include "idd/denoiser.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace hhi::idd {

using core::Shape;
using core::TensorT;
namespace ops = core::ops;

namespace {

template <class T>
void draw_linear(core::RngStream& rng, TensorT<T>& w, std::int64_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::int64_t i = 0; i < w.numel(); ++i)
    w.data()[i] = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
}

template <class T>
void draw_normal(core::RngStream& rng, TensorT<T>& t, double stddev) {
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t.data()[i] = static_cast<T>(rng.normal() * stddev);
}

template <class T>
void fill_value(TensorT<T>& t, T v) {
  for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = v;
}

}  // namespace

template <class T>
DenoiserT<T>::DenoiserT(const DenoiserConfig& c) : cfg(c) {
  if (cfg.channels < 1 || cfg.heads < 1 || cfg.ff < 1 || cfg.blocks < 1)
    throw ConfigError("denoiser sizes must be positive");
  if (cfg.channels % cfg.heads != 0)
    throw ConfigError("channels must be divisible by heads");
  if (cfg.tokens < 1 || cfg.frames < 1 || cfg.d_in < 2 || cfg.d_out < 1)
    throw ConfigError("denoiser token grid is not configured");

  const std::int64_t C = cfg.channels;
  auto reg = [&](const std::string& name, Shape shape) -> TensorT<T>& {
    return params.add(name, TensorT<T>::zeros(std::move(shape)));
  };

  embed_w = reg("embed.w", {C, cfg.d_in});
  embed_b = reg("embed.b", {C});
  joint_emb = reg("joint_emb", {cfg.tokens, 1, C});
  step1_w = reg("step.fc1.w", {C, cfg.step_dim});
  step1_b = reg("step.fc1.b", {C});
  step2_w = reg("step.fc2.w", {C, C});
  step2_b = reg("step.fc2.b", {C});
  blocks.resize(cfg.blocks);
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    Block& blk = blocks[b];
    blk.ln1_g = reg(p + "ln1.g", {C});
    blk.ln1_b = reg(p + "ln1.b", {C});
    auto mha = [&](const std::string& prefix, ops::MhaWeightsT<T>& w) {
      w.wq = reg(prefix + ".wq", {C, C});
      w.bq = reg(prefix + ".bq", {C});
      w.wk = reg(prefix + ".wk", {C, C});
      w.bk = reg(prefix + ".bk", {C});
      w.wv = reg(prefix + ".wv", {C, C});
      w.bv = reg(prefix + ".bv", {C});
      w.wo = reg(prefix + ".wo", {C, C});
      w.bo = reg(prefix + ".bo", {C});
    };
    mha(p + "attn_time", blk.att_time);
    blk.ln2_g = reg(p + "ln2.g", {C});
    blk.ln2_b = reg(p + "ln2.b", {C});
    mha(p + "attn_joint", blk.att_joint);
    blk.ln3_g = reg(p + "ln3.g", {C});
    blk.ln3_b = reg(p + "ln3.b", {C});
    blk.ff1_w = reg(p + "ff.fc1.w", {cfg.ff, C});
    blk.ff1_b = reg(p + "ff.fc1.b", {cfg.ff});
    blk.ff2_w = reg(p + "ff.fc2.w", {C, cfg.ff});
    blk.ff2_b = reg(p + "ff.fc2.b", {C});
  }
  dec_w = reg("decoder.w", {cfg.d_out, C});
  dec_b = reg("decoder.b", {cfg.d_out});

  core::Tensor pe = core::sinusoidal_table(cfg.frames, C);
  time_pe = TensorT<T>::zeros({cfg.frames, C});
  for (std::int64_t i = 0; i < pe.numel(); ++i)
    time_pe.data()[i] = static_cast<T>(pe.data()[i]);
}

template <class T>
void DenoiserT<T>::init_params(std::uint64_t seed) {
  for (size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.names[i];
    TensorT<T>& t = params.tensors[i];
    core::RngStream rng(seed, "init/" + name);
    auto dot = name.rfind('.');
    const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
    if (name == "decoder.w" || name == "decoder.b") {
      fill_value(t, T(0));  // zero decoder: untrained output is exactly zero
    } else if (name == "joint_emb") {
      draw_normal(rng, t, 0.02);
    } else if (leaf == "g") {
      fill_value(t, T(1));
    } else if (!leaf.empty() && leaf[0] == 'b') {
      fill_value(t, T(0));
    } else {
      // Weights: plain .w plus the attention projections .wq/.wk/.wv/.wo.
      draw_linear(rng, t, t.shape().back());
    }
  }
}

template <class T>
TensorT<T> DenoiserT<T>::forward(core::TapeT<T>* tape, const TensorT<T>& x,
                                 const std::vector<int>& t_steps) const {
  if (x.rank() != 4 || x.dim(1) != cfg.tokens || x.dim(2) != cfg.frames ||
      x.dim(3) != cfg.d_in)
    throw ConfigError("denoiser input shape mismatch: got " +
                            core::shape_str(x.shape()));
  const std::int64_t B = x.dim(0);
  if (static_cast<std::int64_t>(t_steps.size()) != B)
    throw ConfigError("one diffusion step index is required per sample");
  const std::int64_t K = cfg.tokens, L = cfg.frames, C = cfg.channels;

  TensorT<T> h = ops::linear(tape, x, embed_w, embed_b);
  h = ops::add(tape, h, time_pe);
  h = ops::add(tape, h, joint_emb);

  // Step embedding: fixed sinusoidal code through a two-layer MLP, one row
  // per sample, broadcast over the whole token grid.
  TensorT<T> code = TensorT<T>::zeros({B, cfg.step_dim});
  for (std::int64_t b = 0; b < B; ++b) {
    std::vector<float> row = core::sinusoidal_embedding(t_steps[b], cfg.step_dim);
    for (int i = 0; i < cfg.step_dim; ++i)
      code.data()[b * cfg.step_dim + i] = static_cast<T>(row[i]);
  }
  TensorT<T> s = ops::linear(tape, code, step1_w, step1_b);
  s = ops::silu(tape, s);
  s = ops::linear(tape, s, step2_w, step2_b);
  s = ops::reshape(tape, s, {B, 1, 1, C});

  TensorT<T> skip;
  for (const Block& blk : blocks) {
    h = ops::add(tape, h, s);

    TensorT<T> flat = ops::reshape(tape, h, {B * K, L, C});
    TensorT<T> n1 = ops::layer_norm(tape, flat, blk.ln1_g, blk.ln1_b);
    TensorT<T> a1 = ops::multi_head_attention(tape, n1, n1, n1, cfg.heads, blk.att_time);
    flat = ops::add(tape, flat, a1);
    h = ops::reshape(tape, flat, {B, K, L, C});

    TensorT<T> swapped = ops::permute(tape, h, {0, 2, 1, 3});
    TensorT<T> flat2 = ops::reshape(tape, swapped, {B * L, K, C});
    TensorT<T> n2 = ops::layer_norm(tape, flat2, blk.ln2_g, blk.ln2_b);
    TensorT<T> a2 = ops::multi_head_attention(tape, n2, n2, n2, cfg.heads, blk.att_joint);
    flat2 = ops::add(tape, flat2, a2);
    swapped = ops::reshape(tape, flat2, {B, L, K, C});
    h = ops::permute(tape, swapped, {0, 2, 1, 3});

    TensorT<T> n3 = ops::layer_norm(tape, h, blk.ln3_g, blk.ln3_b);
    TensorT<T> f = ops::linear(tape, n3, blk.ff1_w, blk.ff1_b);
    f = ops::silu(tape, f);
    f = ops::linear(tape, f, blk.ff2_w, blk.ff2_b);
    h = ops::add(tape, h, f);

    skip = skip.defined() ? ops::add(tape, skip, h) : h;
  }

  return ops::linear(tape, skip, dec_w, dec_b);
}

template struct DenoiserT<float>;
template struct DenoiserT<double>;
template DenoiserT<double> DenoiserT<float>::cast<double>() const;
template DenoiserT<float> DenoiserT<float>::cast<float>() const;

}  // namespace hhi::idd
