#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bvh/bvh.hpp"

namespace hhi::kin {

// Row-major 3x3.
using Mat3 = std::array<double, 9>;
using Vec3 = std::array<double, 3>;

Mat3 mat3_identity();
Mat3 mat3_mul(const Mat3& a, const Mat3& b);
Mat3 mat3_transpose(const Mat3& m);
double mat3_det(const Mat3& m);
Vec3 mat3_apply(const Mat3& m, const Vec3& v);

// Rotation axis order as listed in a BVH CHANNELS line; XYZ means
// R = Rx(a1) * Ry(a2) * Rz(a3) applied to column vectors.
enum class EulerOrder { XYZ, XZY, YXZ, YZX, ZXY, ZYX };

const char* euler_order_name(EulerOrder order);
EulerOrder euler_order_from_channels(const std::vector<bvh::Channel>& channels);

// Angles in radians, in channel order.
Mat3 euler_to_matrix(double a1, double a2, double a3, EulerOrder order);

// Inverse of euler_to_matrix for valid rotations. At gimbal lock
// (|middle angle| = 90 deg) the split between first and third angle is not
// observable; the convention here is third angle = 0.
std::array<double, 3> matrix_to_euler(const Mat3& m, EulerOrder order);

// Nearest rotation in Frobenius norm via SVD polar decomposition; flips the
// smallest singular direction when the input has negative determinant.
Mat3 project_to_so3(const Mat3& m);

// One frame of pose: root translation plus one local rotation per joint,
// in hierarchy order.
struct JointAngleFrame {
  Vec3 root_pos{};
  std::vector<Mat3> rot;
};

// Splits a motion row into root position and per-joint local rotations.
// Rotation channels compose in listed order; translation channels on
// non-root joints are ignored downstream (offsets define the geometry).
JointAngleFrame frame_from_motion_row(const bvh::SkeletonHierarchy& sk, const double* row);

// Writes root position and per-joint rotations back into a motion row laid
// out for `sk`. Each joint needs exactly three rotation channels.
void motion_row_from_frame(const bvh::SkeletonHierarchy& sk, const JointAngleFrame& frame,
                           double* row);

// World positions of every joint, scaled by unit_scale (offsets and root
// translation are in file units; outputs are unit_scale * file units).
// out_xyz has joint_count * 3 entries.
void forward_kinematics(const bvh::SkeletonHierarchy& sk, const JointAngleFrame& frame,
                        double unit_scale, double* out_xyz);

// Parent-child distances; entry j is the length of the link into joint j
// (entry 0, the root, is 0).
std::vector<double> link_lengths(const bvh::SkeletonHierarchy& sk, const float* xyz);

}  // namespace hhi::kin
