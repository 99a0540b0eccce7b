#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "baselines/baselines.hpp"
#include "core/errors.hpp"
#include "core/kernels.hpp"
#include "core/parallel.hpp"
#include "data/store.hpp"
#include "data/synth.hpp"
#include "eval/eval.hpp"
#include "idd/sample.hpp"
#include "idd/train.hpp"
#include "kin/kinematics.hpp"

namespace fs = std::filesystem;
using namespace hhi;

namespace {

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Every command announces the configuration it actually ran with, so logs
// are sufficient to reproduce a run.
void log_config(const std::string& cmd,
                const std::vector<std::pair<std::string, std::string>>& kv) {
  std::cerr << "[" << cmd << "] resolved config:";
  for (const auto& [k, v] : kv) std::cerr << " " << k << "=" << v;
  std::cerr << "\n";
  std::cerr << "[" << cmd << "] simd=" << core::kern::isa_name(core::kern::active_isa())
            << " threads=" << core::configured_threads() << "\n";
}

struct SplitArg {
  double train = 0.8, val = 0.1, test = 0.1;
};

SplitArg parse_split(const std::string& text) {
  SplitArg s;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &s.train, &s.val, &s.test) != 3)
    throw ConfigError("--split expects three comma-separated ratios, got '" + text + "'");
  return s;
}

// ---------------------------------------------------------------- inspect

int run_inspect(const std::string& path, bool as_json) {
  bvh::BvhFile file = bvh::parse_bvh(path);
  const auto& sk = file.skeleton;
  if (as_json) {
    nlohmann::json j;
    j["joints"] = sk.joint_count();
    j["frames"] = file.motion.frames;
    j["fps"] = file.motion.fps();
    j["channels"] = sk.total_channels;
    nlohmann::json names = nlohmann::json::array();
    for (const auto& joint : sk.joints) names.push_back(joint.name);
    j["names"] = names;
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << "joints: " << sk.joint_count() << ", frames: " << file.motion.frames
            << ", fps: " << fmt_num(file.motion.fps()) << "\n";
  for (int i = 0; i < sk.joint_count(); ++i) {
    const auto& joint = sk.joints[i];
    int depth = 0;
    for (int p = joint.parent; p >= 0; p = sk.joints[p].parent) ++depth;
    std::cout << std::string(static_cast<size_t>(depth) * 2, ' ') << joint.name << " ("
              << joint.channels.size() << " channels";
    for (auto c : joint.channels) std::cout << " " << bvh::channel_name(c);
    std::cout << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------- prepare

struct PrepareArgs {
  std::string raw_dir, out_dir;
  double fps = 24.0;
  int obs = 24, fut = 24, stride = 1;
  double unit_scale = 1.0;
  std::string split = "0.8,0.1,0.1";
  std::uint64_t seed = 0;
  int window_delay = 0;
  std::string delayed_agent = "cg";
  bool angles = false;
};

data::ClipPair clip_from_bvh(const bvh::BvhFile& cg, const bvh::BvhFile& cr,
                             const std::string& clip_id, std::int64_t pair_id,
                             std::int64_t task_id, double fps, double unit_scale,
                             bool want_angles) {
  data::ClipPair clip;
  clip.clip_id = clip_id;
  clip.pair_id = pair_id;
  clip.task_id = task_id;
  if (want_angles) clip.angles = std::make_shared<data::ClipAngles>();

  auto bake = [&](const bvh::BvhFile& file, data::PoseSequence& pose,
                  data::AngleTrack* ang) {
    bvh::MotionClip motion = bvh::resample(file.motion, fps);
    const auto& sk = file.skeleton;
    const int J = sk.joint_count();
    pose.resize(motion.frames, J);
    if (ang) ang->resize(motion.frames, J);
    std::vector<double> xyz(static_cast<size_t>(J) * 3);
    for (std::int64_t f = 0; f < motion.frames; ++f) {
      kin::JointAngleFrame frame = kin::frame_from_motion_row(sk, motion.row(f));
      kin::forward_kinematics(sk, frame, unit_scale, xyz.data());
      float* p = pose.frame(f);
      for (int i = 0; i < J * 3; ++i) p[i] = static_cast<float>(xyz[i]);
      if (ang) {
        float* fe = ang->frame(f);
        for (int c = 0; c < 3; ++c)
          fe[c] = static_cast<float>(frame.root_pos[c] * unit_scale);
        for (int j = 0; j < J; ++j)
          for (int k = 0; k < 9; ++k)
            fe[3 + 9 * j + k] = static_cast<float>(frame.rot[j][k]);
      }
    }
  };
  bake(cg, clip.cg, clip.angles ? &clip.angles->cg : nullptr);
  bake(cr, clip.cr, clip.angles ? &clip.angles->cr : nullptr);

  const std::int64_t frames = std::min(clip.cg.frames, clip.cr.frames);
  if (clip.cg.frames != clip.cr.frames) {
    std::cerr << "warning: " << clip_id << ": agents have " << clip.cg.frames << " and "
              << clip.cr.frames << " frames after resampling; truncating to " << frames
              << "\n";
    auto trunc = [&](data::PoseSequence& p) {
      p.xyz.resize(static_cast<size_t>(frames) * p.joints * 3);
      p.frames = frames;
    };
    trunc(clip.cg);
    trunc(clip.cr);
    if (clip.angles) {
      auto ta = [&](data::AngleTrack& t) {
        t.feat.resize(static_cast<size_t>(frames) * t.width());
        t.frames = frames;
      };
      ta(clip.angles->cg);
      ta(clip.angles->cr);
    }
  }
  return clip;
}

bvh::SkeletonHierarchy scaled_skeleton(const bvh::SkeletonHierarchy& sk, double unit_scale) {
  bvh::SkeletonHierarchy out = sk;
  for (auto& j : out.joints) {
    for (int c = 0; c < 3; ++c) {
      j.offset[c] *= unit_scale;
      j.end_site[c] *= unit_scale;
    }
  }
  return out;
}

void windows_to_splits(const std::vector<data::ClipPair>& clips, const PrepareArgs& a,
                       const bvh::SkeletonHierarchy& rig_mm, bool has_angles,
                       const std::string& cmd) {
  data::WindowSpec wspec;
  wspec.obs = a.obs;
  wspec.fut = a.fut;
  wspec.stride = a.stride;
  wspec.delay = a.window_delay;
  if (a.delayed_agent != "cg" && a.delayed_agent != "cr")
    throw ConfigError("--delayed-agent must be cg or cr");
  wspec.delayed_agent = a.delayed_agent == "cg" ? 0 : 1;

  std::vector<data::InteractionWindow> windows;
  std::vector<std::int64_t> pair_ids;
  for (const auto& clip : clips) {
    auto w = data::build_windows(clip, wspec);
    if (w.empty()) {
      std::cerr << "warning: " << clip.clip_id << ": too short for a single window, skipped\n";
      continue;
    }
    pair_ids.push_back(clip.pair_id);
    for (auto& x : w) windows.push_back(std::move(x));
  }
  if (windows.empty()) throw ConfigError("no windows could be built from the input clips");

  SplitArg ratios = parse_split(a.split);
  data::SplitRatios sr{ratios.train, ratios.val, ratios.test};
  data::SplitResult split = data::split_by_participant(pair_ids, sr, a.seed);

  data::DatasetMeta meta;
  meta.obs = a.obs;
  meta.fut = a.fut;
  meta.joints = rig_mm.joint_count();
  meta.fps = a.fps;
  meta.pelvis_index = 0;
  meta.has_angles = has_angles;
  meta.window_delay = a.window_delay;
  meta.delayed_agent = a.window_delay > 0 ? a.delayed_agent : "none";
  meta.skeleton = rig_mm;
  data::write_split_datasets(a.out_dir, meta, windows, split);
  std::cerr << "[" << cmd << "] wrote " << windows.size() << " windows ("
            << split.train_pairs.size() << "/" << split.val_pairs.size() << "/"
            << split.test_pairs.size() << " pairs) to " << a.out_dir << "\n";
}

int run_prepare(const PrepareArgs& a) {
  log_config("prepare", {{"raw", a.raw_dir},
                         {"out", a.out_dir},
                         {"fps", fmt_num(a.fps)},
                         {"obs", std::to_string(a.obs)},
                         {"fut", std::to_string(a.fut)},
                         {"stride", std::to_string(a.stride)},
                         {"unit_scale", fmt_num(a.unit_scale)},
                         {"split", a.split},
                         {"seed", std::to_string(a.seed)},
                         {"window_delay", std::to_string(a.window_delay)},
                         {"delayed_agent", a.delayed_agent},
                         {"angles", a.angles ? "true" : "false"}});

  std::ifstream pairs_csv(fs::path(a.raw_dir) / "pairs.csv");
  if (!pairs_csv) throw IoError("cannot open " + a.raw_dir + "/pairs.csv");
  std::vector<std::tuple<std::string, std::int64_t, std::int64_t>> takes;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(pairs_csv, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("take,", 0) == 0) continue;  // header
    std::string take;
    long long pair = 0, task = 0;
    std::istringstream ss(line);
    if (!std::getline(ss, take, ',') || !(ss >> pair))
      throw ParseError("pairs.csv:" + std::to_string(lineno) + ": expected take,pair,task");
    ss.ignore(1, ',');
    if (!(ss >> task))
      throw ParseError("pairs.csv:" + std::to_string(lineno) + ": expected take,pair,task");
    takes.emplace_back(take, pair, task);
  }

  std::vector<data::ClipPair> clips;
  bvh::SkeletonHierarchy rig;
  bool have_rig = false;
  for (const auto& [take, pair, task] : takes) {
    fs::path cg_path = fs::path(a.raw_dir) / (take + "_cg.bvh");
    fs::path cr_path = fs::path(a.raw_dir) / (take + "_cr.bvh");
    if (!fs::exists(cg_path) || !fs::exists(cr_path)) {
      std::cerr << "warning: take '" << take
                << "' is missing its partner file, skipped\n";
      continue;
    }
    bvh::BvhFile cg = bvh::parse_bvh(cg_path.string());
    bvh::BvhFile cr = bvh::parse_bvh(cr_path.string());
    if (cg.skeleton.joint_count() != cr.skeleton.joint_count()) {
      std::cerr << "warning: take '" << take << "' has mismatched rigs, skipped\n";
      continue;
    }
    if (!have_rig) {
      rig = cg.skeleton;
      have_rig = true;
    } else if (cg.skeleton.joint_count() != rig.joint_count()) {
      std::cerr << "warning: take '" << take
                << "' does not match the corpus rig, skipped\n";
      continue;
    }
    clips.push_back(
        clip_from_bvh(cg, cr, take, pair, task, a.fps, a.unit_scale, a.angles));
  }
  if (clips.empty()) throw ConfigError("no usable take pairs found in " + a.raw_dir);
  windows_to_splits(clips, a, scaled_skeleton(rig, a.unit_scale), a.angles, "prepare");
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out_dir;
  data::SynthConfig gen;
  int obs = 24, fut = 24, stride = 1;
  std::string split = "0.8,0.1,0.1";
  int window_delay = 0;
  std::string delayed_agent = "cg";
  std::string emit_bvh;
};

int run_synth(const SynthArgs& s) {
  log_config("synth", {{"out", s.out_dir},
                       {"seed", std::to_string(s.gen.seed)},
                       {"clips", std::to_string(s.gen.clips)},
                       {"len", std::to_string(s.gen.clip_len)},
                       {"fps", fmt_num(s.gen.fps)},
                       {"delay", std::to_string(s.gen.delay)},
                       {"noise", fmt_num(s.gen.noise)},
                       {"smoothing", fmt_num(s.gen.smoothing)},
                       {"obs", std::to_string(s.obs)},
                       {"fut", std::to_string(s.fut)},
                       {"stride", std::to_string(s.stride)},
                       {"split", s.split},
                       {"window_delay", std::to_string(s.window_delay)},
                       {"delayed_agent", s.delayed_agent}});

  std::vector<data::ClipPair> clips;
  clips.reserve(s.gen.clips);
  for (int i = 0; i < s.gen.clips; ++i) {
    data::SynthClip clip = data::synth_clip(s.gen, i);
    if (!s.emit_bvh.empty()) {
      fs::create_directories(s.emit_bvh);
      bvh::write_bvh((fs::path(s.emit_bvh) / (clip.pair.clip_id + "_cg.bvh")).string(),
                     clip.skeleton, clip.motion_cg);
      bvh::write_bvh((fs::path(s.emit_bvh) / (clip.pair.clip_id + "_cr.bvh")).string(),
                     clip.skeleton, clip.motion_cr);
    }
    clips.push_back(std::move(clip.pair));
  }
  if (!s.emit_bvh.empty()) {
    std::ofstream csv(fs::path(s.emit_bvh) / "pairs.csv");
    csv << "take,pair,task\n";
    for (const auto& c : clips) csv << c.clip_id << "," << c.pair_id << "," << c.task_id << "\n";
  }

  PrepareArgs a;
  a.out_dir = s.out_dir;
  a.fps = s.gen.fps;
  a.obs = s.obs;
  a.fut = s.fut;
  a.stride = s.stride;
  a.split = s.split;
  a.seed = s.gen.seed;
  a.window_delay = s.window_delay;
  a.delayed_agent = s.delayed_agent;
  windows_to_splits(clips, a, data::synth_skeleton(), true, "synth");
  return 0;
}

// ---------------------------------------------------------------- train

int run_train(const std::string& dataset_dir, const std::string& ckpt,
              idd::TrainConfig cfg) {
  cfg.checkpoint_path = ckpt;
  log_config("train",
             {{"dataset", dataset_dir},
              {"checkpoint", ckpt},
              {"epochs", std::to_string(cfg.epochs)},
              {"batch", std::to_string(cfg.batch)},
              {"seed", std::to_string(cfg.seed)},
              {"lr", fmt_num(cfg.lr)},
              {"width", std::to_string(cfg.width)},
              {"heads", std::to_string(cfg.heads)},
              {"ff", std::to_string(cfg.ff)},
              {"blocks", std::to_string(cfg.blocks)},
              {"steps", std::to_string(cfg.schedule.steps)},
              {"beta_start", fmt_num(cfg.schedule.beta_start)},
              {"beta_end", fmt_num(cfg.schedule.beta_end)},
              {"representation", cfg.representation},
              {"ablate_partner", cfg.ablate_partner ? "true" : "false"},
              {"resume", cfg.resume ? "true" : "false"},
              {"stop_after", std::to_string(cfg.stop_after)}});
  data::Dataset ds = data::read_dataset(dataset_dir);
  idd::TrainResult result = idd::train_model(ds, cfg, &std::cerr);
  if (result.extra.epochs_done == cfg.epochs)
    std::cerr << "[train] saved " << ckpt << "\n";
  else
    std::cerr << "[train] stopped after epoch " << result.extra.epochs_done
              << "; resume with --resume\n";
  return 0;
}

// ---------------------------------------------------------------- predict

int run_predict(const std::string& ckpt_path, const std::string& dataset_dir,
                const std::string& out_dir, const idd::SampleConfig& cfg) {
  log_config("predict", {{"checkpoint", ckpt_path},
                         {"dataset", dataset_dir},
                         {"out", out_dir},
                         {"seed", std::to_string(cfg.seed)},
                         {"num_samples", std::to_string(cfg.num_samples)},
                         {"batch", std::to_string(cfg.batch)}});
  idd::LoadedCheckpoint ck = idd::load_checkpoint(ckpt_path);
  idd::Denoiser model = idd::model_from_checkpoint(ck);
  data::Dataset ds = data::read_dataset(dataset_dir);
  auto preds = idd::predict_windows(model, ck.extra, ds, cfg, &std::cerr);
  data::write_predictions(out_dir, ds.meta, ds.windows, preds);
  if (ck.extra.representation == "angle") {
    auto rows = eval::link_length_report(ds.meta.skeleton, preds);
    eval::write_link_csv((fs::path(out_dir) / "link_report.csv").string(), rows);
    std::cerr << "[predict] mean |link change| = "
              << eval::mean_abs_link_change(rows) << " mm (link_report.csv)\n";
  }
  std::cerr << "[predict] wrote " << preds.size() << " predictions to " << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------- baseline

int run_baseline(const std::string& kind_name, const std::string& dataset_dir,
                 const std::string& out_dir) {
  log_config("baseline",
             {{"kind", kind_name}, {"dataset", dataset_dir}, {"out", out_dir}});
  baselines::Kind kind = baselines::kind_from_name(kind_name);
  data::Dataset ds = data::read_dataset(dataset_dir);
  std::vector<data::PredictedWindow> preds;
  preds.reserve(ds.windows.size());
  for (const auto& w : ds.windows)
    preds.push_back(baselines::predict_window(w, ds.meta.fut, kind));
  data::write_predictions(out_dir, ds.meta, ds.windows, preds);
  std::cerr << "[baseline] wrote " << preds.size() << " predictions to " << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

int run_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& out_csv, bool include_pelvis,
             const std::string& link_csv) {
  log_config("eval", {{"pred", pred_dir},
                      {"gt", gt_dir},
                      {"out", out_csv},
                      {"include_pelvis", include_pelvis ? "true" : "false"}});
  data::Dataset ds = data::read_dataset(gt_dir);
  data::DatasetMeta pmeta;
  auto preds = data::read_predictions(pred_dir, &pmeta);
  if (pmeta.fut != ds.meta.fut || pmeta.joints != ds.meta.joints)
    throw ConfigError("prediction shapes do not match the ground-truth dataset");
  eval::EvalReport report =
      eval::evaluate(ds.windows, preds, ds.meta.pelvis_index, include_pelvis, ds.meta.fps);
  eval::write_report_csv(out_csv, report);
  if (!link_csv.empty()) {
    auto rows = eval::link_length_report(ds.meta.skeleton, preds);
    eval::write_link_csv(link_csv, rows);
  }
  for (const auto& row : report.rows) {
    std::cout << row.agent << " ";
    if (row.horizon_ms < 0)
      std::cout << "average";
    else
      std::cout << row.horizon_ms << "ms";
    std::cout << ": " << row.mpjpe_mm << " mm\n";
  }
  std::cerr << "[eval] wrote " << out_csv << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interaction-aware diffusion pose prediction toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");

  // inspect
  std::string inspect_path;
  bool inspect_json = false;
  auto* c_inspect = app.add_subcommand("inspect", "summarize a BVH file");
  c_inspect->add_option("file", inspect_path, "BVH file")->required();
  c_inspect->add_flag("--json", inspect_json, "machine-readable output");

  // prepare
  PrepareArgs pa;
  auto* c_prepare = app.add_subcommand("prepare", "build a window dataset from raw BVH pairs");
  c_prepare->add_option("raw-dir", pa.raw_dir, "directory with <take>_cg.bvh/<take>_cr.bvh and pairs.csv")->required();
  c_prepare->add_option("out-dir", pa.out_dir, "output dataset directory")->required();
  c_prepare->add_option("--fps", pa.fps, "target frame rate");
  c_prepare->add_option("--obs", pa.obs, "observed frames per window");
  c_prepare->add_option("--fut", pa.fut, "future frames per window");
  c_prepare->add_option("--stride", pa.stride, "window start stride");
  c_prepare->add_option("--unit-scale", pa.unit_scale, "multiplier taking file units to mm");
  c_prepare->add_option("--split", pa.split, "train,val,test ratios");
  c_prepare->add_option("--seed", pa.seed, "split shuffle seed");
  c_prepare->add_option("--window-delay", pa.window_delay, "shift one agent's observations forward this many frames");
  c_prepare->add_option("--delayed-agent", pa.delayed_agent, "which agent is shifted (cg|cr)");
  c_prepare->add_flag("--angles", pa.angles, "also store joint-angle features");

  // synth
  SynthArgs sa;
  auto* c_synth = app.add_subcommand("synth", "generate a coupled two-agent synthetic dataset");
  c_synth->add_option("out-dir", sa.out_dir, "output dataset directory")->required();
  c_synth->add_option("--seed", sa.gen.seed, "generator seed");
  c_synth->add_option("--clips", sa.gen.clips, "number of clips");
  c_synth->add_option("--len", sa.gen.clip_len, "frames per clip");
  c_synth->add_option("--fps", sa.gen.fps, "frame rate");
  c_synth->add_option("--delay", sa.gen.delay, "follower lag in frames");
  c_synth->add_option("--noise", sa.gen.noise, "follower jitter (deg / mm)");
  c_synth->add_option("--smoothing", sa.gen.smoothing, "follower lowpass coefficient");
  c_synth->add_option("--obs", sa.obs, "observed frames per window");
  c_synth->add_option("--fut", sa.fut, "future frames per window");
  c_synth->add_option("--stride", sa.stride, "window start stride");
  c_synth->add_option("--split", sa.split, "train,val,test ratios");
  c_synth->add_option("--window-delay", sa.window_delay, "shift one agent's observations forward");
  c_synth->add_option("--delayed-agent", sa.delayed_agent, "which agent is shifted (cg|cr)");
  c_synth->add_option("--emit-bvh", sa.emit_bvh, "also write raw BVH pairs here");

  // train
  std::string train_dataset, train_ckpt;
  idd::TrainConfig tc;
  tc.epochs = 10;
  tc.width = 32;
  auto* c_train = app.add_subcommand("train", "train a denoiser on a window dataset");
  c_train->add_option("dataset-dir", train_dataset, "training split directory")->required();
  c_train->add_option("checkpoint", train_ckpt, "output checkpoint path")->required();
  c_train->add_option("--epochs", tc.epochs, "training epochs");
  c_train->add_option("--batch", tc.batch, "batch size");
  c_train->add_option("--seed", tc.seed, "training seed");
  c_train->add_option("--lr", tc.lr, "base learning rate");
  c_train->add_option("--width", tc.width, "model channels");
  c_train->add_option("--heads", tc.heads, "attention heads");
  c_train->add_option("--ff", tc.ff, "feed-forward width");
  c_train->add_option("--blocks", tc.blocks, "residual blocks");
  c_train->add_option("--steps", tc.schedule.steps, "diffusion steps");
  c_train->add_option("--beta-start", tc.schedule.beta_start, "first beta");
  c_train->add_option("--beta-end", tc.schedule.beta_end, "last beta");
  c_train->add_option("--representation", tc.representation, "position|angle");
  c_train->add_flag("--ablate-partner", tc.ablate_partner, "zero the caregiver's observations");
  c_train->add_flag("--resume", tc.resume, "continue from <checkpoint>.partial");
  c_train->add_option("--stop-after", tc.stop_after, "stop after this many epochs this run");

  // predict
  std::string pr_ckpt, pr_dataset, pr_out;
  idd::SampleConfig sc;
  auto* c_predict = app.add_subcommand("predict", "sample future poses for a dataset");
  c_predict->add_option("checkpoint", pr_ckpt, "trained checkpoint")->required();
  c_predict->add_option("dataset-dir", pr_dataset, "dataset to condition on")->required();
  c_predict->add_option("out-dir", pr_out, "prediction output directory")->required();
  c_predict->add_option("--seed", sc.seed, "sampling seed");
  c_predict->add_option("--num-samples", sc.num_samples, "draws per window (mean is reported)");
  c_predict->add_option("--batch", sc.batch, "windows per forward pass");

  // baseline
  std::string bl_kind, bl_dataset, bl_out;
  auto* c_baseline = app.add_subcommand("baseline", "write baseline predictions");
  c_baseline->add_option("kind", bl_kind, "zero-velocity|constant-velocity")->required();
  c_baseline->add_option("dataset-dir", bl_dataset, "dataset directory")->required();
  c_baseline->add_option("out-dir", bl_out, "prediction output directory")->required();

  // eval
  std::string ev_pred, ev_gt, ev_out, ev_link;
  bool ev_pelvis = false;
  auto* c_eval = app.add_subcommand("eval", "score predictions against ground truth");
  c_eval->add_option("pred-dir", ev_pred, "prediction directory")->required();
  c_eval->add_option("gt-dir", ev_gt, "ground-truth dataset directory")->required();
  c_eval->add_option("out-csv", ev_out, "report CSV path")->required();
  c_eval->add_flag("--include-pelvis", ev_pelvis, "count the pelvis joint in MPJPE");
  c_eval->add_option("--link-report", ev_link, "also write a link-length drift CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (c_inspect->parsed()) return run_inspect(inspect_path, inspect_json);
    if (c_prepare->parsed()) return run_prepare(pa);
    if (c_synth->parsed()) return run_synth(sa);
    if (c_train->parsed()) return run_train(train_dataset, train_ckpt, tc);
    if (c_predict->parsed()) return run_predict(pr_ckpt, pr_dataset, pr_out, sc);
    if (c_baseline->parsed()) return run_baseline(bl_kind, bl_dataset, bl_out);
    if (c_eval->parsed()) return run_eval(ev_pred, ev_gt, ev_out, ev_pelvis, ev_link);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
