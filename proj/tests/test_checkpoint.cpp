#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "core/adam.hpp"
#include "core/rng.hpp"
#include "idd/checkpoint.hpp"
#include "idd/denoiser.hpp"

using namespace hhi::core;
using namespace hhi::idd;
using hhi::IoError;
using hhi::ParseError;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = "/tmp/hhi_ckpt_test_" + std::to_string(::getpid()) + "_" + name;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

DenoiserConfig tiny_cfg() {
  DenoiserConfig cfg;
  cfg.channels = 8;
  cfg.heads = 2;
  cfg.ff = 8;
  cfg.blocks = 1;
  cfg.step_dim = 16;
  cfg.tokens = 4;
  cfg.frames = 6;
  cfg.d_in = 4;
  cfg.d_out = 3;
  return cfg;
}

CheckpointExtra sample_extra() {
  CheckpointExtra e;
  e.representation = "position";
  e.ablate_partner = true;
  e.joints = 5;
  e.obs = 4;
  e.fut = 2;
  e.seed = 77;
  e.epochs_done = 3;
  e.epochs_total = 9;
  e.batch = 4;
  e.lr = 5e-4;
  e.epoch_losses = {1.25, 0.5, 0.375};
  return e;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_all(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

}  // namespace

TEST_CASE("checkpoint round trip preserves weights and metadata") {
  Denoiser model(tiny_cfg());
  model.init_params(5);
  CheckpointExtra extra = sample_extra();
  TempFile f("roundtrip");
  save_checkpoint(f.path, model, extra, nullptr);

  LoadedCheckpoint ck = load_checkpoint(f.path);
  CHECK(ck.cfg.channels == model.cfg.channels);
  CHECK(ck.cfg.heads == model.cfg.heads);
  CHECK(ck.cfg.ff == model.cfg.ff);
  CHECK(ck.cfg.blocks == model.cfg.blocks);
  CHECK(ck.cfg.step_dim == model.cfg.step_dim);
  CHECK(ck.cfg.tokens == model.cfg.tokens);
  CHECK(ck.cfg.frames == model.cfg.frames);
  CHECK(ck.cfg.d_in == model.cfg.d_in);
  CHECK(ck.cfg.d_out == model.cfg.d_out);

  CHECK(ck.extra.representation == extra.representation);
  CHECK(ck.extra.ablate_partner == extra.ablate_partner);
  CHECK(ck.extra.joints == extra.joints);
  CHECK(ck.extra.obs == extra.obs);
  CHECK(ck.extra.fut == extra.fut);
  CHECK(ck.extra.seed == extra.seed);
  CHECK(ck.extra.epochs_done == extra.epochs_done);
  CHECK(ck.extra.epochs_total == extra.epochs_total);
  CHECK(ck.extra.batch == extra.batch);
  CHECK(ck.extra.lr == doctest::Approx(extra.lr).epsilon(1e-12));
  REQUIRE(ck.extra.epoch_losses.size() == extra.epoch_losses.size());
  for (size_t i = 0; i < extra.epoch_losses.size(); ++i)
    CHECK(ck.extra.epoch_losses[i] == doctest::Approx(extra.epoch_losses[i]));

  CHECK_FALSE(ck.has_optimizer);
  REQUIRE(ck.param_names.size() == model.params.size());
  for (size_t i = 0; i < ck.param_names.size(); ++i) {
    CHECK(ck.param_names[i] == model.params.names[i]);
    const Tensor& src = model.params.tensors[i];
    REQUIRE(std::int64_t(ck.param_values[i].size()) == src.numel());
    CHECK(std::memcmp(ck.param_values[i].data(), src.data(),
                      sizeof(float) * src.numel()) == 0);
  }

  Denoiser rebuilt = model_from_checkpoint(ck);
  for (size_t i = 0; i < model.params.size(); ++i) {
    const Tensor& a = model.params.tensors[i];
    const Tensor& b = rebuilt.params.tensors[i];
    REQUIRE(a.shape() == b.shape());
    CHECK(std::memcmp(a.data(), b.data(), sizeof(float) * a.numel()) == 0);
  }
}

TEST_CASE("optimizer moments survive a partial checkpoint") {
  Denoiser model(tiny_cfg());
  model.init_params(5);
  Adam opt(AdamConfig{}, model.params);

  // Hand the optimizer distinctive non-trivial state.
  std::vector<std::vector<float>> m = opt.moment1(), v = opt.moment2();
  RngStream rng(31, "moments", 0);
  for (auto& slot : m)
    for (auto& x : slot) x = rng.normal();
  for (auto& slot : v)
    for (auto& x : slot) x = rng.uniform_pos();
  opt.restore(1234, m, v);

  TempFile f("partial");
  save_checkpoint(f.path, model, sample_extra(), &opt);

  LoadedCheckpoint ck = load_checkpoint(f.path);
  REQUIRE(ck.has_optimizer);
  CHECK(ck.adam_steps == 1234);
  REQUIRE(ck.adam_m.size() == m.size());
  REQUIRE(ck.adam_v.size() == v.size());
  for (size_t i = 0; i < m.size(); ++i) {
    REQUIRE(ck.adam_m[i].size() == m[i].size());
    CHECK(std::memcmp(ck.adam_m[i].data(), m[i].data(),
                      sizeof(float) * m[i].size()) == 0);
    CHECK(std::memcmp(ck.adam_v[i].data(), v[i].data(),
                      sizeof(float) * v[i].size()) == 0);
  }
}

TEST_CASE("saving twice produces identical bytes") {
  Denoiser model(tiny_cfg());
  model.init_params(9);
  TempFile a("bytes_a"), b("bytes_b");
  save_checkpoint(a.path, model, sample_extra(), nullptr);
  save_checkpoint(b.path, model, sample_extra(), nullptr);
  CHECK(read_all(a.path) == read_all(b.path));
}

TEST_CASE("corrupted checkpoints are rejected with clear errors") {
  Denoiser model(tiny_cfg());
  model.init_params(5);
  TempFile f("corrupt");
  save_checkpoint(f.path, model, sample_extra(), nullptr);
  const std::string good = read_all(f.path);
  REQUIRE(good.size() > 64);

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint(f.path + ".nope"), IoError);
  }
  SUBCASE("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    write_all(f.path, bad);
    CHECK_THROWS_WITH_AS(load_checkpoint(f.path),
                         doctest::Contains("bad magic"), ParseError);
  }
  SUBCASE("unsupported version") {
    // Version lives in the JSON header; rewrite it through the real saver's
    // framing by patching the serialized text.
    std::string bad = good;
    size_t pos = bad.find("\"version\":1");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, std::strlen("\"version\":1"), "\"version\":9");
    write_all(f.path, bad);
    CHECK_THROWS_WITH_AS(load_checkpoint(f.path),
                         doctest::Contains("unsupported checkpoint version"),
                         ParseError);
  }
  SUBCASE("truncated payload") {
    write_all(f.path, good.substr(0, good.size() - 13));
    CHECK_THROWS_WITH_AS(load_checkpoint(f.path),
                         doctest::Contains("truncated"), ParseError);
  }
  SUBCASE("trailing bytes") {
    write_all(f.path, good + "junk");
    CHECK_THROWS_WITH_AS(load_checkpoint(f.path),
                         doctest::Contains("trailing bytes"), ParseError);
  }
  SUBCASE("header cut mid-json") {
    write_all(f.path, good.substr(0, 10));
    CHECK_THROWS_AS(load_checkpoint(f.path), ParseError);
  }
}

TEST_CASE("model_from_checkpoint rejects mismatched parameter sets") {
  Denoiser model(tiny_cfg());
  model.init_params(5);
  TempFile f("mismatch");
  save_checkpoint(f.path, model, sample_extra(), nullptr);
  LoadedCheckpoint ck = load_checkpoint(f.path);

  SUBCASE("renamed parameter") {
    ck.param_names[0] += "_renamed";
    CHECK_THROWS_AS(model_from_checkpoint(ck), ParseError);
  }
  SUBCASE("wrong tensor size") {
    ck.param_values[1].push_back(0.f);
    CHECK_THROWS_AS(model_from_checkpoint(ck), ParseError);
  }
  SUBCASE("dropped parameter") {
    ck.param_names.pop_back();
    ck.param_values.pop_back();
    CHECK_THROWS_AS(model_from_checkpoint(ck), ParseError);
  }
}
