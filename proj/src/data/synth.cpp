#include "data/synth.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "kin/kinematics.hpp"

namespace hhi::data {

namespace {

constexpr int kHarmonics = 3;

struct ChannelWave {
  double bias = 0.0;
  double amp[kHarmonics]{};
  double freq[kHarmonics]{};   // Hz
  double phase[kHarmonics]{};  // radians

  double eval(double t_sec) const {
    double v = bias;
    for (int h = 0; h < kHarmonics; ++h)
      v += amp[h] * std::sin(2.0 * M_PI * freq[h] * t_sec + phase[h]);
    return v;
  }
};

ChannelWave draw_wave(core::RngStream& rng, double amp_lo, double amp_hi, double bias_lo,
                      double bias_hi) {
  ChannelWave w;
  w.bias = bias_lo + (bias_hi - bias_lo) * rng.uniform();
  for (int h = 0; h < kHarmonics; ++h) {
    // One dominant component with progressively smaller ripples keeps the
    // signal smooth enough that extrapolating it is learnable.
    w.amp[h] = (amp_lo + (amp_hi - amp_lo) * rng.uniform()) / (1.0 + h);
    // Periods between roughly two and a half and four and a half seconds:
    // long enough to be identifiable from a short observation, short enough
    // that a pose keeps moving over a one-second horizon.
    w.freq[h] = 0.22 + 0.2 * rng.uniform();
    w.phase[h] = 2.0 * M_PI * rng.uniform();
  }
  return w;
}

}  // namespace

bvh::SkeletonHierarchy synth_skeleton() {
  using bvh::Channel;
  bvh::SkeletonHierarchy sk;
  auto add = [&](const char* name, int parent, double ox, double oy, double oz,
                 bool root) {
    bvh::Joint j;
    j.name = name;
    j.parent = parent;
    j.offset = {ox, oy, oz};
    if (root)
      j.channels = {Channel::Xpos, Channel::Ypos, Channel::Zpos,
                    Channel::Zrot, Channel::Xrot, Channel::Yrot};
    else
      j.channels = {Channel::Zrot, Channel::Xrot, Channel::Yrot};
    j.channel_offset = sk.total_channels;
    sk.total_channels += static_cast<int>(j.channels.size());
    sk.joints.push_back(std::move(j));
  };
  add("pelvis", -1, 0.0, 0.0, 0.0, true);
  add("spine", 0, 0.0, 200.0, 0.0, false);
  add("arm_l", 1, 150.0, 50.0, 0.0, false);
  add("arm_r", 1, -150.0, 50.0, 0.0, false);
  add("head", 1, 0.0, 150.0, 0.0, false);
  sk.joints[4].has_end_site = true;
  sk.joints[4].end_site = {0.0, 120.0, 0.0};
  return sk;
}

SynthClip synth_clip(const SynthConfig& cfg, int clip_index) {
  if (cfg.clip_len < 2) throw ConfigError("synthetic clip length must be at least 2");
  if (cfg.fps <= 0.0) throw ConfigError("synthetic fps must be positive");
  if (cfg.delay < 0) throw ConfigError("synthetic delay must be non-negative");
  if (!(cfg.smoothing > 0.0 && cfg.smoothing <= 1.0))
    throw ConfigError("synthetic smoothing must be in (0, 1]");

  SynthClip out;
  out.skeleton = synth_skeleton();
  const auto& sk = out.skeleton;
  const int channels = sk.total_channels;
  const std::int64_t frames = cfg.clip_len;

  core::RngStream waves(cfg.seed, "synth/waves", static_cast<std::uint64_t>(clip_index));
  std::vector<ChannelWave> wave(channels);
  for (const auto& j : sk.joints) {
    for (size_t c = 0; c < j.channels.size(); ++c) {
      int idx = j.channel_offset + static_cast<int>(c);
      bool pos = j.channels[c] == bvh::Channel::Xpos || j.channels[c] == bvh::Channel::Ypos ||
                 j.channels[c] == bvh::Channel::Zpos;
      if (pos) {
        bool vertical = j.channels[c] == bvh::Channel::Ypos;
        wave[idx] = draw_wave(waves, 40.0, 120.0, vertical ? 900.0 : -200.0,
                              vertical ? 1000.0 : 200.0);
      } else {
        wave[idx] = draw_wave(waves, 8.0, 25.0, -10.0, 10.0);
      }
    }
  }

  auto leader_at = [&](int ch, std::int64_t frame) {
    return wave[ch].eval(static_cast<double>(frame) / cfg.fps);
  };

  out.motion_cg.frames = frames;
  out.motion_cg.channels = channels;
  out.motion_cg.frame_time = 1.0 / cfg.fps;
  out.motion_cg.data.resize(frames * channels);
  for (std::int64_t f = 0; f < frames; ++f)
    for (int c = 0; c < channels; ++c) out.motion_cg.row(f)[c] = leader_at(c, f);

  // Follower: lowpass of the lagged leader, warmed up well before frame 0 so
  // the filter state at the clip start carries no transient.
  out.motion_cr = out.motion_cg;
  const std::int64_t warmup = 100;
  const double a = cfg.smoothing;
  core::RngStream jitter(cfg.seed, "synth/jitter", static_cast<std::uint64_t>(clip_index));
  std::vector<double> state(channels);
  for (int c = 0; c < channels; ++c) state[c] = leader_at(c, -warmup - cfg.delay);
  for (std::int64_t f = -warmup + 1; f < frames; ++f) {
    for (int c = 0; c < channels; ++c)
      state[c] = (1.0 - a) * state[c] + a * leader_at(c, f - cfg.delay);
    if (f >= 0) {
      double* row = out.motion_cr.row(f);
      for (int c = 0; c < channels; ++c) {
        double v = state[c] + cfg.noise * jitter.normal();
        // Keep the two performers apart; purely a rigid stage offset.
        if (c == 0) v += 800.0;
        row[c] = v;
      }
    }
  }

  out.pair.clip_id = "synth_" + std::to_string(clip_index);
  out.pair.pair_id = clip_index;
  out.pair.task_id = 0;
  out.pair.angles = std::make_shared<ClipAngles>();
  const int J = sk.joint_count();
  auto bake = [&](const bvh::MotionClip& motion, PoseSequence& pose, AngleTrack& ang) {
    pose.resize(frames, J);
    ang.resize(frames, J);
    std::vector<double> xyz(static_cast<size_t>(J) * 3);
    for (std::int64_t f = 0; f < frames; ++f) {
      kin::JointAngleFrame jf = kin::frame_from_motion_row(sk, motion.row(f));
      kin::forward_kinematics(sk, jf, 1.0, xyz.data());
      float* p = pose.frame(f);
      for (int i = 0; i < J * 3; ++i) p[i] = static_cast<float>(xyz[i]);
      float* fe = ang.frame(f);
      for (int c = 0; c < 3; ++c) fe[c] = static_cast<float>(jf.root_pos[c]);
      for (int j = 0; j < J; ++j)
        for (int k = 0; k < 9; ++k)
          fe[3 + 9 * j + k] = static_cast<float>(jf.rot[j][k]);
    }
  };
  bake(out.motion_cg, out.pair.cg, out.pair.angles->cg);
  bake(out.motion_cr, out.pair.cr, out.pair.angles->cr);
  return out;
}

std::vector<ClipPair> synth_corpus(const SynthConfig& cfg) {
  std::vector<ClipPair> out;
  out.reserve(cfg.clips);
  for (int i = 0; i < cfg.clips; ++i) out.push_back(synth_clip(cfg, i).pair);
  return out;
}

CouplingProbe probe_coupling(const std::vector<InteractionWindow>& windows, int pelvis_index) {
  if (windows.size() < 40) throw ConfigError("coupling probe needs at least 40 windows");
  const int J = windows[0].obs_cr.joints;
  const int tail = 3;  // observed frames fed to the regressors
  const int d_own = tail * J * 3;
  const int d_tgt = J * 3;
  const std::int64_t n = static_cast<std::int64_t>(windows.size());
  const std::int64_t n_fit = n * 7 / 10;

  // Row layout: [1, own tail frames, leader tail frames]; both agents are
  // centred on the follower's pelvis at its last observed frame so absolute
  // stage position carries no information.
  Eigen::MatrixXd X(n, 1 + 2 * d_own);
  Eigen::MatrixXd Y(n, d_tgt);
  for (std::int64_t w = 0; w < n; ++w) {
    const auto& win = windows[w];
    const float* anchor = win.obs_cr.at(win.obs_cr.frames - 1, pelvis_index);
    X(w, 0) = 1.0;
    int col = 1;
    for (const PoseSequence* src : {&win.obs_cr, &win.obs_cg}) {
      for (int f = 0; f < tail; ++f) {
        const float* row = src->frame(src->frames - tail + f);
        for (int i = 0; i < J * 3; ++i)
          X(w, col++) = static_cast<double>(row[i]) - static_cast<double>(anchor[i % 3]);
      }
    }
    const float* tgt = win.fut_cr.frame(win.fut_cr.frames - 1);
    for (int i = 0; i < d_tgt; ++i)
      Y(w, i) = static_cast<double>(tgt[i]) - static_cast<double>(anchor[i % 3]);
  }

  auto holdout_r2 = [&](int cols) {
    Eigen::MatrixXd Xf = X.topLeftCorner(n_fit, cols);
    Eigen::MatrixXd Yf = Y.topRows(n_fit);
    Eigen::MatrixXd G = Xf.transpose() * Xf;
    G.diagonal().array() += 1e-6 * static_cast<double>(n_fit);
    Eigen::MatrixXd W = G.ldlt().solve(Xf.transpose() * Yf);
    Eigen::MatrixXd Xe = X.bottomRows(n - n_fit).leftCols(cols);
    Eigen::MatrixXd Ye = Y.bottomRows(n - n_fit);
    Eigen::MatrixXd R = Ye - Xe * W;
    Eigen::RowVectorXd mean = Ye.colwise().mean();
    double ss_res = R.squaredNorm();
    double ss_tot = (Ye.rowwise() - mean).squaredNorm();
    if (ss_tot <= 0.0) return 0.0;
    return 1.0 - ss_res / ss_tot;
  };

  CouplingProbe p;
  p.r2_own = holdout_r2(1 + d_own);
  p.r2_joint = holdout_r2(1 + 2 * d_own);
  return p;
}

}  // namespace hhi::data
