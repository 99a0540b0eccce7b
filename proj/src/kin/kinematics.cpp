#include "kin/kinematics.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace hhi::kin {

Mat3 mat3_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[static_cast<size_t>(i * 3 + k)] * b[static_cast<size_t>(k * 3 + j)];
      c[static_cast<size_t>(i * 3 + j)] = s;
    }
  }
  return c;
}

Mat3 mat3_transpose(const Mat3& m) {
  return {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]};
}

double mat3_det(const Mat3& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Vec3 mat3_apply(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

namespace {

Mat3 axis_rotation(int axis, double a) {
  double c = std::cos(a);
  double s = std::sin(a);
  switch (axis) {
    case 0: return {1, 0, 0, 0, c, -s, 0, s, c};
    case 1: return {c, 0, s, 0, 1, 0, -s, 0, c};
    default: return {c, -s, 0, s, c, 0, 0, 0, 1};
  }
}

// Axis indices (first, second, third) for each order.
void order_axes(EulerOrder order, int& i, int& j, int& k) {
  switch (order) {
    case EulerOrder::XYZ: i = 0; j = 1; k = 2; break;
    case EulerOrder::XZY: i = 0; j = 2; k = 1; break;
    case EulerOrder::YXZ: i = 1; j = 0; k = 2; break;
    case EulerOrder::YZX: i = 1; j = 2; k = 0; break;
    case EulerOrder::ZXY: i = 2; j = 0; k = 1; break;
    case EulerOrder::ZYX: i = 2; j = 1; k = 0; break;
  }
}

int axis_of_channel(bvh::Channel c) {
  switch (c) {
    case bvh::Channel::Xrot: return 0;
    case bvh::Channel::Yrot: return 1;
    case bvh::Channel::Zrot: return 2;
    default: return -1;
  }
}

}  // namespace

const char* euler_order_name(EulerOrder order) {
  switch (order) {
    case EulerOrder::XYZ: return "XYZ";
    case EulerOrder::XZY: return "XZY";
    case EulerOrder::YXZ: return "YXZ";
    case EulerOrder::YZX: return "YZX";
    case EulerOrder::ZXY: return "ZXY";
    case EulerOrder::ZYX: return "ZYX";
  }
  return "?";
}

EulerOrder euler_order_from_channels(const std::vector<bvh::Channel>& channels) {
  std::vector<int> axes;
  for (bvh::Channel c : channels) {
    int a = axis_of_channel(c);
    if (a >= 0) axes.push_back(a);
  }
  if (axes.size() != 3) {
    throw ConfigError("expected exactly 3 rotation channels, found " +
                      std::to_string(axes.size()));
  }
  for (EulerOrder o : {EulerOrder::XYZ, EulerOrder::XZY, EulerOrder::YXZ, EulerOrder::YZX,
                       EulerOrder::ZXY, EulerOrder::ZYX}) {
    int i, j, k;
    order_axes(o, i, j, k);
    if (axes[0] == i && axes[1] == j && axes[2] == k) return o;
  }
  throw ConfigError("rotation channels must name three distinct axes");
}

Mat3 euler_to_matrix(double a1, double a2, double a3, EulerOrder order) {
  int i, j, k;
  order_axes(order, i, j, k);
  return mat3_mul(axis_rotation(i, a1), mat3_mul(axis_rotation(j, a2), axis_rotation(k, a3)));
}

std::array<double, 3> matrix_to_euler(const Mat3& m, EulerOrder order) {
  int i, j, k;
  order_axes(order, i, j, k);
  // Parity of the axis triple: +1 for cyclic (XYZ, YZX, ZXY).
  double eps = ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;
  double sb = std::clamp(eps * m[static_cast<size_t>(i * 3 + k)], -1.0, 1.0);
  double beta = std::asin(sb);
  if (std::fabs(sb) < 1.0 - 1e-9) {
    double alpha = std::atan2(-eps * m[static_cast<size_t>(j * 3 + k)], m[static_cast<size_t>(k * 3 + k)]);
    double gamma = std::atan2(-eps * m[static_cast<size_t>(i * 3 + j)], m[static_cast<size_t>(i * 3 + i)]);
    return {alpha, beta, gamma};
  }
  // Gimbal lock: only alpha -/+ gamma is observable; report gamma = 0.
  double s = sb > 0 ? 1.0 : -1.0;
  double alpha = std::atan2(s * m[static_cast<size_t>(j * 3 + i)], m[static_cast<size_t>(j * 3 + j)]);
  return {alpha, beta, 0.0};
}

Mat3 project_to_so3(const Mat3& m) {
  Eigen::Matrix3d em;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) em(r, c) = m[static_cast<size_t>(r * 3 + c)];
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(em, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d r = u * v.transpose();
  if (r.determinant() < 0.0) {
    // Flip the axis of least singular value to land on a proper rotation.
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = -1.0;
    r = u * d * v.transpose();
  }
  Mat3 out;
  for (int rr = 0; rr < 3; ++rr) {
    for (int cc = 0; cc < 3; ++cc) out[static_cast<size_t>(rr * 3 + cc)] = r(rr, cc);
  }
  return out;
}

JointAngleFrame frame_from_motion_row(const bvh::SkeletonHierarchy& sk, const double* row) {
  JointAngleFrame frame;
  frame.rot.resize(sk.joints.size(), mat3_identity());
  for (size_t j = 0; j < sk.joints.size(); ++j) {
    const bvh::Joint& joint = sk.joints[j];
    Mat3 r = mat3_identity();
    for (size_t c = 0; c < joint.channels.size(); ++c) {
      double v = row[joint.channel_offset + static_cast<int>(c)];
      switch (joint.channels[c]) {
        case bvh::Channel::Xpos:
          if (joint.parent < 0) frame.root_pos[0] = v;
          break;
        case bvh::Channel::Ypos:
          if (joint.parent < 0) frame.root_pos[1] = v;
          break;
        case bvh::Channel::Zpos:
          if (joint.parent < 0) frame.root_pos[2] = v;
          break;
        default: {
          int axis = axis_of_channel(joint.channels[c]);
          r = mat3_mul(r, axis_rotation(axis, v * (M_PI / 180.0)));
          break;
        }
      }
    }
    frame.rot[j] = r;
  }
  return frame;
}

void motion_row_from_frame(const bvh::SkeletonHierarchy& sk, const JointAngleFrame& frame,
                           double* row) {
  if (frame.rot.size() != sk.joints.size()) {
    throw ConfigError("frame joint count does not match hierarchy");
  }
  for (size_t j = 0; j < sk.joints.size(); ++j) {
    const bvh::Joint& joint = sk.joints[j];
    std::vector<bvh::Channel> rot_channels;
    for (bvh::Channel c : joint.channels) {
      if (axis_of_channel(c) >= 0) rot_channels.push_back(c);
    }
    EulerOrder order = euler_order_from_channels(rot_channels);
    std::array<double, 3> angles = matrix_to_euler(frame.rot[j], order);
    size_t rot_idx = 0;
    for (size_t c = 0; c < joint.channels.size(); ++c) {
      double v = 0.0;
      switch (joint.channels[c]) {
        case bvh::Channel::Xpos: v = joint.parent < 0 ? frame.root_pos[0] : 0.0; break;
        case bvh::Channel::Ypos: v = joint.parent < 0 ? frame.root_pos[1] : 0.0; break;
        case bvh::Channel::Zpos: v = joint.parent < 0 ? frame.root_pos[2] : 0.0; break;
        default: v = angles[rot_idx++] * (180.0 / M_PI); break;
      }
      row[joint.channel_offset + static_cast<int>(c)] = v;
    }
  }
}

void forward_kinematics(const bvh::SkeletonHierarchy& sk, const JointAngleFrame& frame,
                        double unit_scale, double* out_xyz) {
  size_t n = sk.joints.size();
  if (frame.rot.size() != n) throw ConfigError("frame joint count does not match hierarchy");
  std::vector<Mat3> global(n);
  for (size_t j = 0; j < n; ++j) {
    const bvh::Joint& joint = sk.joints[j];
    if (joint.parent < 0) {
      global[j] = frame.rot[j];
      for (int a = 0; a < 3; ++a) {
        out_xyz[j * 3 + static_cast<size_t>(a)] =
            unit_scale * frame.root_pos[static_cast<size_t>(a)];
      }
    } else {
      size_t p = static_cast<size_t>(joint.parent);
      Vec3 off = {unit_scale * joint.offset[0], unit_scale * joint.offset[1],
                  unit_scale * joint.offset[2]};
      Vec3 d = mat3_apply(global[p], off);
      for (int a = 0; a < 3; ++a) {
        out_xyz[j * 3 + static_cast<size_t>(a)] = out_xyz[p * 3 + static_cast<size_t>(a)] + d[static_cast<size_t>(a)];
      }
      global[j] = mat3_mul(global[p], frame.rot[j]);
    }
  }
}

std::vector<double> link_lengths(const bvh::SkeletonHierarchy& sk, const float* xyz) {
  std::vector<double> out(sk.joints.size(), 0.0);
  for (size_t j = 0; j < sk.joints.size(); ++j) {
    int p = sk.joints[j].parent;
    if (p < 0) continue;
    double dx = static_cast<double>(xyz[j * 3 + 0]) - xyz[static_cast<size_t>(p) * 3 + 0];
    double dy = static_cast<double>(xyz[j * 3 + 1]) - xyz[static_cast<size_t>(p) * 3 + 1];
    double dz = static_cast<double>(xyz[j * 3 + 2]) - xyz[static_cast<size_t>(p) * 3 + 2];
    out[j] = std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return out;
}

}  // namespace hhi::kin
