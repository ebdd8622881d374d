#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace poselab {

struct Intrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
};

/// Rigid transform from model frame to camera frame, translation in mm.
struct Pose {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return R * p + t; }
    bool rotation_valid(double tol = 1e-6) const;
};

using PointCloud = std::vector<Eigen::Vector3d>;

/// Pinhole projection; throws std::domain_error naming the first point
/// with non-positive camera-frame depth.
Eigen::Vector2d project_point(const Eigen::Vector3d& p_model, const Pose& pose,
                              const Intrinsics& K);
std::vector<Eigen::Vector2d> project(std::span<const Eigen::Vector3d> points, const Pose& pose,
                                     const Intrinsics& K);

struct Correspondence {
    Eigen::Vector2d uv;   // px
    Eigen::Vector3d p3d;  // model frame, mm
};

/// Direct PnP solve on n >= 4 correspondences (EPnP, with a
/// homography-based path for planar point sets). Returns nothing when
/// the system is degenerate.
std::optional<Pose> solve_pnp(std::span<const Correspondence> corrs, const Intrinsics& K);

struct RansacConfig {
    int iterations = 300;
    int sample_size = 4;
    double inlier_px = 5.0;
    std::uint64_t seed = 0;
};

struct PnPResult {
    Pose pose;
    std::vector<int> inliers;
};

/// Seeded RANSAC over minimal PnP solves, followed by a
/// Levenberg-Marquardt refit on the consensus set. Requires >= 6
/// correspondences; returns nothing when no consensus of size >= 6
/// exists.
std::optional<PnPResult> ransac_pnp(std::span<const Correspondence> corrs, const Intrinsics& K,
                                    const RansacConfig& cfg = {});

/// Minimizes total squared reprojection error over axis-angle +
/// translation, starting from init.
Pose refine_pose_lm(std::span<const Correspondence> corrs, const Intrinsics& K, const Pose& init,
                    int max_iters = 50);

/// Depth image (row-major, mm, 0 = missing) gated by a mask into a
/// camera-frame point cloud. Pixel (u,v) maps through
/// X=(u-cx)d/fx, Y=(v-cy)d/fy, Z=d.
PointCloud backproject(std::span<const float> depth_mm, std::span<const std::uint8_t> mask,
                       int width, int height, const Intrinsics& K);

struct IcpConfig {
    int max_iters = 30;
    double tol = 1e-4;  // pose-change threshold, rad and mm
    double trim_fraction = 0.1;
};

struct IcpResult {
    Pose pose;
    bool refined = false;  // false when the scene cloud was empty
    int iterations = 0;
    double mean_residual = 0;  // trimmed mean NN distance at the last iteration
};

/// Point-to-point trimmed ICP aligning the model cloud to the scene
/// cloud, starting from init. An empty scene returns init unchanged
/// with refined = false.
IcpResult icp_refine(const PointCloud& model, const PointCloud& scene, const Pose& init,
                     const IcpConfig& cfg = {});

/// Closest rotation matrix (SVD projection, det +1).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& M);

/// Geodesic distance between rotations, radians.
double rotation_angle(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb);

}  // namespace poselab
