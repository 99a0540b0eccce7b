#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "data/dataset.hpp"
#include "data/store.hpp"
#include "data/synth.hpp"

using namespace hhi::data;
using hhi::IoError;
using hhi::ParseError;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hhi_store_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string str() const { return path.string(); }
};

Dataset small_dataset(bool with_angles) {
  SynthConfig cfg;
  cfg.seed = 17;
  cfg.clips = 3;
  cfg.clip_len = 70;
  auto corpus = synth_corpus(cfg);

  Dataset ds;
  ds.meta.obs = 24;
  ds.meta.fut = 24;
  ds.meta.joints = 5;
  ds.meta.fps = 24.0;
  ds.meta.pelvis_index = 0;
  ds.meta.has_angles = with_angles;
  ds.meta.skeleton = synth_skeleton();

  WindowSpec spec;
  spec.stride = 6;
  for (auto& clip : corpus) {
    if (!with_angles) clip.angles = nullptr;
    auto w = build_windows(clip, spec);
    ds.windows.insert(ds.windows.end(), w.begin(), w.end());
  }
  REQUIRE(!ds.windows.empty());
  return ds;
}

}  // namespace

TEST_CASE("dataset write and read round trip") {
  for (bool angles : {false, true}) {
    CAPTURE(angles);
    TempDir dir;
    Dataset ds = small_dataset(angles);
    write_dataset(dir.str(), ds.meta, ds.windows);

    CHECK(fs::exists(dir.path / "meta.json"));
    CHECK(fs::exists(dir.path / "manifest.jsonl"));
    CHECK(fs::exists(dir.path / "data.bin"));
    CHECK(fs::exists(dir.path / "angles.bin") == angles);

    Dataset back = read_dataset(dir.str());
    CHECK(back.meta.obs == ds.meta.obs);
    CHECK(back.meta.fut == ds.meta.fut);
    CHECK(back.meta.joints == 5);
    CHECK(back.meta.fps == ds.meta.fps);
    CHECK(back.meta.has_angles == angles);
    CHECK(back.meta.skeleton.joint_count() == 5);
    for (int j = 0; j < 5; ++j) {
      CHECK(back.meta.skeleton.joints[static_cast<size_t>(j)].name ==
            ds.meta.skeleton.joints[static_cast<size_t>(j)].name);
      CHECK(back.meta.skeleton.joints[static_cast<size_t>(j)].parent ==
            ds.meta.skeleton.joints[static_cast<size_t>(j)].parent);
      CHECK(back.meta.skeleton.joints[static_cast<size_t>(j)].offset ==
            ds.meta.skeleton.joints[static_cast<size_t>(j)].offset);
      CHECK(back.meta.skeleton.joints[static_cast<size_t>(j)].channels ==
            ds.meta.skeleton.joints[static_cast<size_t>(j)].channels);
    }

    REQUIRE(back.windows.size() == ds.windows.size());
    for (size_t i = 0; i < ds.windows.size(); ++i) {
      const auto& a = ds.windows[i];
      const auto& b = back.windows[i];
      CHECK(b.meta.clip_id == a.meta.clip_id);
      CHECK(b.meta.pair_id == a.meta.pair_id);
      CHECK(b.meta.start == a.meta.start);
      CHECK(b.obs_cg.xyz == a.obs_cg.xyz);
      CHECK(b.obs_cr.xyz == a.obs_cr.xyz);
      CHECK(b.fut_cg.xyz == a.fut_cg.xyz);
      CHECK(b.fut_cr.xyz == a.fut_cr.xyz);
      REQUIRE(b.has_angles() == angles);
      if (angles) {
        CHECK(b.angles->obs_cg.feat == a.angles->obs_cg.feat);
        CHECK(b.angles->fut_cr.feat == a.angles->fut_cr.feat);
      }
    }
  }
}

TEST_CASE("split datasets route windows by participant pair") {
  TempDir dir;
  Dataset ds = small_dataset(false);
  std::vector<std::int64_t> ids;
  for (const auto& w : ds.windows) ids.push_back(w.meta.pair_id);
  SplitResult split = split_by_participant(ids, SplitRatios{}, 3);

  write_split_datasets(dir.str(), ds.meta, ds.windows, split);
  Dataset train = read_dataset((dir.path / "train").string());
  Dataset val = read_dataset((dir.path / "val").string());
  Dataset test = read_dataset((dir.path / "test").string());

  CHECK(train.windows.size() + val.windows.size() + test.windows.size() == ds.windows.size());
  auto in = [](const std::vector<std::int64_t>& v, std::int64_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  for (const auto& w : train.windows) CHECK(in(split.train_pairs, w.meta.pair_id));
  for (const auto& w : val.windows) CHECK(in(split.val_pairs, w.meta.pair_id));
  for (const auto& w : test.windows) CHECK(in(split.test_pairs, w.meta.pair_id));
}

TEST_CASE("reading a missing or damaged dataset fails loudly") {
  TempDir dir;
  CHECK_THROWS_AS(read_dataset((dir.path / "nope").string()), IoError);

  Dataset ds = small_dataset(false);
  write_dataset(dir.str(), ds.meta, ds.windows);

  SUBCASE("truncated data.bin") {
    fs::resize_file(dir.path / "data.bin", 10);
    CHECK_THROWS(read_dataset(dir.str()));
  }
  SUBCASE("corrupt meta.json") {
    std::ofstream(dir.path / "meta.json") << "{not json";
    CHECK_THROWS(read_dataset(dir.str()));
  }
}

TEST_CASE("predictions round trip with observations dropped") {
  TempDir dir;
  Dataset ds = small_dataset(false);
  std::vector<PredictedWindow> preds;
  for (const auto& w : ds.windows) preds.emplace_back(w.fut_cg, w.fut_cr);

  write_predictions(dir.str(), ds.meta, ds.windows, preds);
  DatasetMeta meta;
  auto back = read_predictions(dir.str(), &meta);
  CHECK(meta.fut == ds.meta.fut);
  CHECK(meta.joints == ds.meta.joints);
  REQUIRE(back.size() == preds.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    CHECK(back[i].first.xyz == preds[i].first.xyz);
    CHECK(back[i].second.xyz == preds[i].second.xyz);
  }
}
