#include "data/store.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "core/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset files are little-endian; big-endian hosts need byte swaps");

namespace hhi::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

json skeleton_to_json(const bvh::SkeletonHierarchy& sk) {
  json arr = json::array();
  for (const auto& j : sk.joints) {
    json e;
    e["name"] = j.name;
    e["parent"] = j.parent;
    e["offset"] = {j.offset[0], j.offset[1], j.offset[2]};
    json ch = json::array();
    for (auto c : j.channels) ch.push_back(bvh::channel_name(c));
    e["channels"] = ch;
    if (j.has_end_site) e["end_site"] = {j.end_site[0], j.end_site[1], j.end_site[2]};
    arr.push_back(std::move(e));
  }
  return arr;
}

bvh::Channel channel_from_name(const std::string& name) {
  using bvh::Channel;
  if (name == "Xposition") return Channel::Xpos;
  if (name == "Yposition") return Channel::Ypos;
  if (name == "Zposition") return Channel::Zpos;
  if (name == "Xrotation") return Channel::Xrot;
  if (name == "Yrotation") return Channel::Yrot;
  if (name == "Zrotation") return Channel::Zrot;
  throw ParseError("unknown channel name in meta.json: " + name);
}

bvh::SkeletonHierarchy skeleton_from_json(const json& arr) {
  bvh::SkeletonHierarchy sk;
  for (const auto& e : arr) {
    bvh::Joint j;
    j.name = e.at("name").get<std::string>();
    j.parent = e.at("parent").get<int>();
    auto off = e.at("offset");
    for (int i = 0; i < 3; ++i) j.offset[i] = off.at(i).get<double>();
    for (const auto& c : e.at("channels")) j.channels.push_back(channel_from_name(c));
    if (e.contains("end_site")) {
      j.has_end_site = true;
      for (int i = 0; i < 3; ++i) j.end_site[i] = e["end_site"].at(i).get<double>();
    }
    j.channel_offset = sk.total_channels;
    sk.total_channels += static_cast<int>(j.channels.size());
    sk.joints.push_back(std::move(j));
  }
  return sk;
}

json meta_to_json(const DatasetMeta& m, const char* format, std::int64_t windows) {
  json j;
  j["format"] = format;
  j["version"] = 1;
  j["obs"] = m.obs;
  j["fut"] = m.fut;
  j["joints"] = m.joints;
  j["fps"] = m.fps;
  j["pelvis_index"] = m.pelvis_index;
  j["has_angles"] = m.has_angles;
  j["window_delay"] = m.window_delay;
  j["delayed_agent"] = m.delayed_agent;
  j["windows"] = windows;
  j["skeleton"] = skeleton_to_json(m.skeleton);
  return j;
}

DatasetMeta meta_from_json(const json& j, const char* format, std::int64_t* windows) {
  if (j.value("format", "") != format)
    throw ParseError(std::string("meta.json is not a ") + format + " file");
  if (j.value("version", 0) != 1)
    throw ParseError("unsupported dataset version " + std::to_string(j.value("version", 0)));
  DatasetMeta m;
  m.obs = j.at("obs").get<int>();
  m.fut = j.at("fut").get<int>();
  m.joints = j.at("joints").get<int>();
  m.fps = j.at("fps").get<double>();
  m.pelvis_index = j.at("pelvis_index").get<int>();
  m.has_angles = j.at("has_angles").get<bool>();
  m.window_delay = j.at("window_delay").get<int>();
  m.delayed_agent = j.at("delayed_agent").get<std::string>();
  m.skeleton = skeleton_from_json(j.at("skeleton"));
  *windows = j.at("windows").get<std::int64_t>();
  return m;
}

void append_floats(std::ofstream& out, const float* p, size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * 4));
}

void read_floats(std::ifstream& in, float* p, size_t n) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * 4));
}

std::string manifest_line(const WindowMeta& m) {
  json j;
  j["clip"] = m.clip_id;
  j["pair"] = m.pair_id;
  j["task"] = m.task_id;
  j["start"] = m.start;
  j["delay"] = m.delay;
  return j.dump();
}

WindowMeta manifest_from_line(const std::string& line, std::int64_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError("manifest.jsonl:" + std::to_string(lineno) + ": " + e.what());
  }
  WindowMeta m;
  m.clip_id = j.at("clip").get<std::string>();
  m.pair_id = j.at("pair").get<std::int64_t>();
  m.task_id = j.at("task").get<std::int64_t>();
  m.start = j.at("start").get<std::int64_t>();
  m.delay = j.at("delay").get<int>();
  return m;
}

void check_track(const PoseSequence& p, std::int64_t frames, int joints, const char* what) {
  if (p.frames != frames || p.joints != joints)
    throw ConfigError(std::string("window ") + what + " does not match dataset meta");
}

}  // namespace

void write_dataset(const std::string& dir, const DatasetMeta& meta,
                   const std::vector<InteractionWindow>& windows) {
  fs::create_directories(dir);
  write_file(fs::path(dir) / "meta.json",
             meta_to_json(meta, "hhi-dataset", static_cast<std::int64_t>(windows.size()))
                     .dump(2) +
                 "\n");

  std::string manifest;
  for (const auto& w : windows) manifest += manifest_line(w.meta) + "\n";
  write_file(fs::path(dir) / "manifest.jsonl", manifest);

  std::ofstream data(fs::path(dir) / "data.bin", std::ios::binary);
  if (!data) throw IoError("cannot open for writing: " + dir + "/data.bin");
  for (const auto& w : windows) {
    check_track(w.obs_cg, meta.obs, meta.joints, "obs_cg");
    check_track(w.obs_cr, meta.obs, meta.joints, "obs_cr");
    check_track(w.fut_cg, meta.fut, meta.joints, "fut_cg");
    check_track(w.fut_cr, meta.fut, meta.joints, "fut_cr");
    append_floats(data, w.obs_cg.xyz.data(), w.obs_cg.xyz.size());
    append_floats(data, w.obs_cr.xyz.data(), w.obs_cr.xyz.size());
    append_floats(data, w.fut_cg.xyz.data(), w.fut_cg.xyz.size());
    append_floats(data, w.fut_cr.xyz.data(), w.fut_cr.xyz.size());
  }
  if (!data) throw IoError("write failed: " + dir + "/data.bin");

  if (meta.has_angles) {
    std::ofstream ang(fs::path(dir) / "angles.bin", std::ios::binary);
    if (!ang) throw IoError("cannot open for writing: " + dir + "/angles.bin");
    for (const auto& w : windows) {
      if (!w.angles)
        throw ConfigError("dataset declares angle features but a window has none");
      append_floats(ang, w.angles->obs_cg.feat.data(), w.angles->obs_cg.feat.size());
      append_floats(ang, w.angles->obs_cr.feat.data(), w.angles->obs_cr.feat.size());
      append_floats(ang, w.angles->fut_cg.feat.data(), w.angles->fut_cg.feat.size());
      append_floats(ang, w.angles->fut_cr.feat.data(), w.angles->fut_cr.feat.size());
    }
    if (!ang) throw IoError("write failed: " + dir + "/angles.bin");
  }
}

Dataset read_dataset(const std::string& dir) {
  Dataset ds;
  std::int64_t declared = 0;
  json meta_json;
  try {
    meta_json = json::parse(read_file(fs::path(dir) / "meta.json"));
  } catch (const json::exception& e) {
    throw ParseError(dir + "/meta.json: " + e.what());
  }
  ds.meta = meta_from_json(meta_json, "hhi-dataset", &declared);

  std::ifstream mf(fs::path(dir) / "manifest.jsonl");
  if (!mf) throw IoError("cannot open: " + dir + "/manifest.jsonl");
  std::vector<WindowMeta> metas;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(mf, line)) {
    ++lineno;
    if (line.empty()) continue;
    metas.push_back(manifest_from_line(line, lineno));
  }
  if (static_cast<std::int64_t>(metas.size()) != declared)
    throw ParseError(dir + ": meta.json declares " + std::to_string(declared) +
                     " windows but manifest.jsonl has " + std::to_string(metas.size()));

  const int J = ds.meta.joints;
  const size_t per_window =
      static_cast<size_t>(2 * (ds.meta.obs + ds.meta.fut)) * J * 3;
  std::ifstream data(fs::path(dir) / "data.bin", std::ios::binary);
  if (!data) throw IoError("cannot open: " + dir + "/data.bin");
  data.seekg(0, std::ios::end);
  auto bytes = static_cast<std::uint64_t>(data.tellg());
  if (bytes != metas.size() * per_window * 4)
    throw ParseError(dir + "/data.bin: size " + std::to_string(bytes) +
                     " does not match " + std::to_string(metas.size()) + " windows");
  data.seekg(0);

  std::ifstream ang;
  const int aw = 3 + 9 * J;
  if (ds.meta.has_angles) {
    ang.open(fs::path(dir) / "angles.bin", std::ios::binary);
    if (!ang) throw IoError("cannot open: " + dir + "/angles.bin");
    ang.seekg(0, std::ios::end);
    auto abytes = static_cast<std::uint64_t>(ang.tellg());
    std::uint64_t expect =
        metas.size() * static_cast<std::uint64_t>(2 * (ds.meta.obs + ds.meta.fut)) * aw * 4;
    if (abytes != expect)
      throw ParseError(dir + "/angles.bin: size " + std::to_string(abytes) +
                       " does not match the manifest");
    ang.seekg(0);
  }

  ds.windows.resize(metas.size());
  for (size_t i = 0; i < metas.size(); ++i) {
    InteractionWindow& w = ds.windows[i];
    w.meta = metas[i];
    w.obs_cg.resize(ds.meta.obs, J);
    w.obs_cr.resize(ds.meta.obs, J);
    w.fut_cg.resize(ds.meta.fut, J);
    w.fut_cr.resize(ds.meta.fut, J);
    read_floats(data, w.obs_cg.xyz.data(), w.obs_cg.xyz.size());
    read_floats(data, w.obs_cr.xyz.data(), w.obs_cr.xyz.size());
    read_floats(data, w.fut_cg.xyz.data(), w.fut_cg.xyz.size());
    read_floats(data, w.fut_cr.xyz.data(), w.fut_cr.xyz.size());
    if (ds.meta.has_angles) {
      w.angles = std::make_shared<WindowAngles>();
      w.angles->obs_cg.resize(ds.meta.obs, J);
      w.angles->obs_cr.resize(ds.meta.obs, J);
      w.angles->fut_cg.resize(ds.meta.fut, J);
      w.angles->fut_cr.resize(ds.meta.fut, J);
      read_floats(ang, w.angles->obs_cg.feat.data(), w.angles->obs_cg.feat.size());
      read_floats(ang, w.angles->obs_cr.feat.data(), w.angles->obs_cr.feat.size());
      read_floats(ang, w.angles->fut_cg.feat.data(), w.angles->fut_cg.feat.size());
      read_floats(ang, w.angles->fut_cr.feat.data(), w.angles->fut_cr.feat.size());
    }
  }
  if (!data) throw IoError("read failed: " + dir + "/data.bin");
  return ds;
}

void write_split_datasets(const std::string& dir, const DatasetMeta& meta,
                          const std::vector<InteractionWindow>& windows,
                          const SplitResult& split) {
  auto member = [](const std::vector<std::int64_t>& v, std::int64_t x) {
    return std::binary_search(v.begin(), v.end(), x);
  };
  std::vector<InteractionWindow> train, val, test;
  for (const auto& w : windows) {
    if (member(split.train_pairs, w.meta.pair_id))
      train.push_back(w);
    else if (member(split.val_pairs, w.meta.pair_id))
      val.push_back(w);
    else if (member(split.test_pairs, w.meta.pair_id))
      test.push_back(w);
    else
      throw ConfigError("window pair " + std::to_string(w.meta.pair_id) +
                        " is missing from the split");
  }
  write_dataset((fs::path(dir) / "train").string(), meta, train);
  write_dataset((fs::path(dir) / "val").string(), meta, val);
  write_dataset((fs::path(dir) / "test").string(), meta, test);
}

void write_predictions(const std::string& dir, const DatasetMeta& meta,
                       const std::vector<InteractionWindow>& source,
                       const std::vector<PredictedWindow>& preds) {
  if (source.size() != preds.size())
    throw ConfigError("prediction count does not match source windows");
  fs::create_directories(dir);
  DatasetMeta m = meta;
  m.has_angles = false;  // predictions are stored as positions only
  write_file(fs::path(dir) / "meta.json",
             meta_to_json(m, "hhi-predictions", static_cast<std::int64_t>(preds.size()))
                     .dump(2) +
                 "\n");
  std::string manifest;
  for (const auto& w : source) manifest += manifest_line(w.meta) + "\n";
  write_file(fs::path(dir) / "manifest.jsonl", manifest);

  std::ofstream data(fs::path(dir) / "data.bin", std::ios::binary);
  if (!data) throw IoError("cannot open for writing: " + dir + "/data.bin");
  for (const auto& p : preds) {
    check_track(p.first, meta.fut, meta.joints, "pred fut_cg");
    check_track(p.second, meta.fut, meta.joints, "pred fut_cr");
    append_floats(data, p.first.xyz.data(), p.first.xyz.size());
    append_floats(data, p.second.xyz.data(), p.second.xyz.size());
  }
  if (!data) throw IoError("write failed: " + dir + "/data.bin");
}

std::vector<PredictedWindow> read_predictions(const std::string& dir, DatasetMeta* meta_out) {
  std::int64_t declared = 0;
  json meta_json;
  try {
    meta_json = json::parse(read_file(fs::path(dir) / "meta.json"));
  } catch (const json::exception& e) {
    throw ParseError(dir + "/meta.json: " + e.what());
  }
  DatasetMeta meta = meta_from_json(meta_json, "hhi-predictions", &declared);

  const size_t per_window = static_cast<size_t>(2 * meta.fut) * meta.joints * 3;
  std::ifstream data(fs::path(dir) / "data.bin", std::ios::binary);
  if (!data) throw IoError("cannot open: " + dir + "/data.bin");
  data.seekg(0, std::ios::end);
  auto bytes = static_cast<std::uint64_t>(data.tellg());
  if (bytes != static_cast<std::uint64_t>(declared) * per_window * 4)
    throw ParseError(dir + "/data.bin: size does not match " + std::to_string(declared) +
                     " predictions");
  data.seekg(0);

  std::vector<PredictedWindow> preds(declared);
  for (auto& p : preds) {
    p.first.resize(meta.fut, meta.joints);
    p.second.resize(meta.fut, meta.joints);
    read_floats(data, p.first.xyz.data(), p.first.xyz.size());
    read_floats(data, p.second.xyz.data(), p.second.xyz.size());
  }
  if (!data) throw IoError("read failed: " + dir + "/data.bin");
  if (meta_out) *meta_out = meta;
  return preds;
}

}  // namespace hhi::data
