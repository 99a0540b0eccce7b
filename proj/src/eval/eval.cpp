#include "eval/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "core/errors.hpp"
#include "kin/kinematics.hpp"

namespace hhi::eval {

HorizonSpec default_horizons(double fps, int fut) {
  HorizonSpec h;
  for (int ms : {85, 330, 580, 750, 1000}) {
    int frame = static_cast<int>(std::lround(ms / 1000.0 * fps));
    frame = std::max(1, std::min(fut, frame));
    h.ms.push_back(ms);
    h.frames.push_back(frame);
  }
  return h;
}

double mpjpe_frame(const float* pred, const float* gt, int joints, int pelvis_index,
                   bool include_pelvis) {
  if (pelvis_index < 0 || pelvis_index >= joints)
    throw ConfigError("pelvis index out of range");
  const float* pp = pred + pelvis_index * 3;
  const float* gp = gt + pelvis_index * 3;
  double sum = 0.0;
  int counted = 0;
  for (int j = 0; j < joints; ++j) {
    if (j == pelvis_index && !include_pelvis) continue;
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      double d = (static_cast<double>(pred[j * 3 + c]) - pp[c]) -
                 (static_cast<double>(gt[j * 3 + c]) - gp[c]);
      d2 += d * d;
    }
    sum += std::sqrt(d2);
    ++counted;
  }
  if (counted == 0) throw ConfigError("no joints left to evaluate");
  return sum / counted;
}

EvalReport evaluate(const std::vector<data::InteractionWindow>& gt,
                    const std::vector<data::PredictedWindow>& preds, int pelvis_index,
                    bool include_pelvis, double fps) {
  if (gt.size() != preds.size())
    throw ConfigError("prediction count does not match ground-truth windows");
  if (gt.empty()) throw ConfigError("nothing to evaluate");
  const int fut = static_cast<int>(gt[0].fut_cg.frames);
  const int joints = gt[0].fut_cg.joints;

  // sums[agent][frame] accumulates the per-window frame MPJPE.
  std::vector<double> sums(2 * static_cast<size_t>(fut), 0.0);
  for (size_t w = 0; w < gt.size(); ++w) {
    const data::PoseSequence* gt_seq[2] = {&gt[w].fut_cg, &gt[w].fut_cr};
    const data::PoseSequence* pd_seq[2] = {&preds[w].first, &preds[w].second};
    for (int a = 0; a < 2; ++a) {
      if (pd_seq[a]->frames != fut || pd_seq[a]->joints != joints)
        throw ConfigError("prediction shape does not match ground truth");
      for (int f = 0; f < fut; ++f)
        sums[a * fut + f] += mpjpe_frame(pd_seq[a]->frame(f), gt_seq[a]->frame(f), joints,
                                         pelvis_index, include_pelvis);
    }
  }

  const double n = static_cast<double>(gt.size());
  const HorizonSpec hs = default_horizons(fps, fut);
  EvalReport report;
  report.fps = fps;
  report.fut = fut;
  for (int a = 0; a < 2; ++a) {
    const std::string agent = a == 0 ? "cg" : "cr";
    for (size_t h = 0; h < hs.ms.size(); ++h) {
      ReportRow row;
      row.agent = agent;
      row.horizon_ms = hs.ms[h];
      row.frame = hs.frames[h];
      row.mpjpe_mm = sums[a * fut + (hs.frames[h] - 1)] / n;
      row.windows = static_cast<std::int64_t>(gt.size());
      report.rows.push_back(row);
    }
    ReportRow avg;
    avg.agent = agent;
    avg.horizon_ms = -1;
    avg.frame = 0;
    double total = 0.0;
    for (int f = 0; f < fut; ++f) total += sums[a * fut + f];
    avg.mpjpe_mm = total / (n * fut);
    avg.windows = static_cast<std::int64_t>(gt.size());
    report.rows.push_back(avg);
  }
  return report;
}

double report_value(const EvalReport& r, const std::string& agent, int horizon_ms) {
  for (const auto& row : r.rows)
    if (row.agent == agent && row.horizon_ms == horizon_ms) return row.mpjpe_mm;
  throw ConfigError("no such report row: " + agent + "/" + std::to_string(horizon_ms));
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const HorizonSpec hs = default_horizons(report.fps, report.fut);
  out << "# pelvis-aligned MPJPE;";
  for (size_t h = 0; h < hs.ms.size(); ++h)
    out << " " << hs.ms[h] << "ms -> future frame " << hs.frames[h] << ";";
  out << " 'average' = mean over all " << report.fut << " future frames at "
      << fmt6(report.fps) << " fps\n";
  out << "agent,horizon_ms,mpjpe_mm,n_windows\n";
  for (const auto& row : report.rows) {
    out << row.agent << ",";
    if (row.horizon_ms < 0)
      out << "average";
    else
      out << row.horizon_ms;
    out << "," << fmt6(row.mpjpe_mm) << "," << row.windows << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<LinkChangeRow> link_length_report(const bvh::SkeletonHierarchy& sk,
                                              const std::vector<data::PredictedWindow>& preds) {
  if (preds.empty()) throw ConfigError("no predictions for the link-length report");
  const int fut = static_cast<int>(preds[0].first.frames);
  const int joints = sk.joint_count();
  if (preds[0].first.joints != joints)
    throw ConfigError("prediction joint count does not match the rig");

  std::vector<double> rest(joints, 0.0);
  for (int j = 1; j < joints; ++j) {
    const auto& off = sk.joints[j].offset;
    rest[j] = std::sqrt(off[0] * off[0] + off[1] * off[1] + off[2] * off[2]);
  }

  // Mean |length - rest length| per (link, frame) over windows and agents.
  std::vector<double> acc(static_cast<size_t>(joints) * fut, 0.0);
  for (const auto& p : preds) {
    for (const data::PoseSequence* seq : {&p.first, &p.second}) {
      for (int f = 0; f < fut; ++f) {
        std::vector<double> len = kin::link_lengths(sk, seq->frame(f));
        for (int j = 1; j < joints; ++j)
          acc[static_cast<size_t>(j) * fut + f] += std::abs(len[j] - rest[j]);
      }
    }
  }

  const double n = 2.0 * static_cast<double>(preds.size());
  std::vector<LinkChangeRow> rows;
  for (int j = 1; j < joints; ++j) {
    for (int f = 0; f < fut; ++f) {
      LinkChangeRow r;
      r.link = sk.joints[j].name;
      r.frame = f + 1;
      r.abs_change_mm = acc[static_cast<size_t>(j) * fut + f] / n;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

double mean_abs_link_change(const std::vector<LinkChangeRow>& rows) {
  if (rows.empty()) throw ConfigError("empty link-length report");
  double sum = 0.0;
  for (const auto& r : rows) sum += r.abs_change_mm;
  return sum / static_cast<double>(rows.size());
}

void write_link_csv(const std::string& path, const std::vector<LinkChangeRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# mean |link length - rig rest length| over windows and agents, mm\n";
  out << "link,frame,abs_change_mm\n";
  for (const auto& r : rows)
    out << r.link << "," << r.frame << "," << fmt6(r.abs_change_mm) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace hhi::eval
