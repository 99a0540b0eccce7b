#include "idd/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>

#include "core/errors.hpp"

namespace hhi::idd {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'I', 'D', 'D', '1'};

void write_bytes(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, size_t n, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n)
    throw ParseError(path + ": truncated checkpoint");
}

json extra_to_json(const CheckpointExtra& e) {
  json j;
  j["representation"] = e.representation;
  j["ablate_partner"] = e.ablate_partner;
  j["joints"] = e.joints;
  j["obs"] = e.obs;
  j["fut"] = e.fut;
  j["schedule"] = {{"steps", e.schedule.steps},
                   {"beta_start", e.schedule.beta_start},
                   {"beta_end", e.schedule.beta_end}};
  j["seed"] = e.seed;
  j["epochs_done"] = e.epochs_done;
  j["epochs_total"] = e.epochs_total;
  j["batch"] = e.batch;
  j["lr"] = e.lr;
  j["epoch_losses"] = e.epoch_losses;
  return j;
}

CheckpointExtra extra_from_json(const json& j) {
  CheckpointExtra e;
  e.representation = j.at("representation").get<std::string>();
  e.ablate_partner = j.at("ablate_partner").get<bool>();
  e.joints = j.at("joints").get<int>();
  e.obs = j.at("obs").get<int>();
  e.fut = j.at("fut").get<int>();
  e.schedule.steps = j.at("schedule").at("steps").get<int>();
  e.schedule.beta_start = j.at("schedule").at("beta_start").get<double>();
  e.schedule.beta_end = j.at("schedule").at("beta_end").get<double>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.epochs_done = j.at("epochs_done").get<int>();
  e.epochs_total = j.at("epochs_total").get<int>();
  e.batch = j.at("batch").get<int>();
  e.lr = j.at("lr").get<double>();
  e.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
  return e;
}

}  // namespace

void save_checkpoint(const std::string& path, const Denoiser& model,
                     const CheckpointExtra& extra, const core::Adam* optimizer) {
  json header;
  header["version"] = 1;
  header["arch"] = {{"channels", model.cfg.channels}, {"heads", model.cfg.heads},
                    {"ff", model.cfg.ff},             {"blocks", model.cfg.blocks},
                    {"step_dim", model.cfg.step_dim}, {"tokens", model.cfg.tokens},
                    {"frames", model.cfg.frames},     {"d_in", model.cfg.d_in},
                    {"d_out", model.cfg.d_out}};
  header["train"] = extra_to_json(extra);
  json plist = json::array();
  for (size_t i = 0; i < model.params.size(); ++i) {
    json p;
    p["name"] = model.params.names[i];
    p["shape"] = model.params.tensors[i].shape();
    plist.push_back(std::move(p));
  }
  header["params"] = plist;
  header["optimizer"] = nullptr;
  if (optimizer) {
    header["optimizer"] = {{"kind", "adam"}, {"steps", optimizer->steps_taken()}};
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_bytes(out, kMagic, 4);
  std::uint32_t len = static_cast<std::uint32_t>(text.size());
  write_bytes(out, &len, 4);
  write_bytes(out, text.data(), text.size());
  for (const auto& t : model.params.tensors)
    write_bytes(out, t.data(), static_cast<size_t>(t.numel()) * 4);
  if (optimizer) {
    const auto& m = const_cast<core::Adam*>(optimizer)->moment1();
    const auto& v = const_cast<core::Adam*>(optimizer)->moment2();
    for (const auto& slot : m) write_bytes(out, slot.data(), slot.size() * 4);
    for (const auto& slot : v) write_bytes(out, slot.data(), slot.size() * 4);
  }
  if (!out) throw IoError("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[4];
  read_bytes(in, magic, 4, path);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError(path + ": not a checkpoint file (bad magic)");
  std::uint32_t len = 0;
  read_bytes(in, &len, 4, path);
  std::string text(len, '\0');
  read_bytes(in, text.data(), len, path);
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(path + ": corrupt checkpoint header: " + e.what());
  }
  int version = header.value("version", 0);
  if (version != 1)
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));

  LoadedCheckpoint ck;
  const json& arch = header.at("arch");
  ck.cfg.channels = arch.at("channels").get<int>();
  ck.cfg.heads = arch.at("heads").get<int>();
  ck.cfg.ff = arch.at("ff").get<int>();
  ck.cfg.blocks = arch.at("blocks").get<int>();
  ck.cfg.step_dim = arch.at("step_dim").get<int>();
  ck.cfg.tokens = arch.at("tokens").get<int>();
  ck.cfg.frames = arch.at("frames").get<int>();
  ck.cfg.d_in = arch.at("d_in").get<int>();
  ck.cfg.d_out = arch.at("d_out").get<int>();
  ck.extra = extra_from_json(header.at("train"));

  for (const auto& p : header.at("params")) {
    ck.param_names.push_back(p.at("name").get<std::string>());
    auto shape = p.at("shape").get<std::vector<std::int64_t>>();
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<float> values(static_cast<size_t>(n));
    read_bytes(in, values.data(), values.size() * 4, path);
    ck.param_values.push_back(std::move(values));
  }
  if (!header.at("optimizer").is_null()) {
    ck.has_optimizer = true;
    ck.adam_steps = header["optimizer"].at("steps").get<std::int64_t>();
    ck.adam_m.resize(ck.param_values.size());
    ck.adam_v.resize(ck.param_values.size());
    for (size_t i = 0; i < ck.param_values.size(); ++i) {
      ck.adam_m[i].resize(ck.param_values[i].size());
      read_bytes(in, ck.adam_m[i].data(), ck.adam_m[i].size() * 4, path);
    }
    for (size_t i = 0; i < ck.param_values.size(); ++i) {
      ck.adam_v[i].resize(ck.param_values[i].size());
      read_bytes(in, ck.adam_v[i].data(), ck.adam_v[i].size() * 4, path);
    }
  }
  // Anything left over means the file does not match its own header.
  char probe;
  in.read(&probe, 1);
  if (!in.eof()) throw ParseError(path + ": trailing bytes after checkpoint payload");
  return ck;
}

Denoiser model_from_checkpoint(const LoadedCheckpoint& ck) {
  Denoiser model(ck.cfg);
  if (ck.param_names.size() != model.params.size())
    throw ParseError("checkpoint parameter list does not match the architecture");
  for (size_t i = 0; i < ck.param_names.size(); ++i) {
    if (ck.param_names[i] != model.params.names[i])
      throw ParseError("checkpoint parameter '" + ck.param_names[i] +
                       "' does not match expected '" + model.params.names[i] + "'");
    auto& t = model.params.tensors[i];
    if (static_cast<std::int64_t>(ck.param_values[i].size()) != t.numel())
      throw ParseError("checkpoint parameter '" + ck.param_names[i] + "' has wrong size");
    std::memcpy(t.data(), ck.param_values[i].data(), ck.param_values[i].size() * 4);
  }
  return model;
}

}  // namespace hhi::idd
