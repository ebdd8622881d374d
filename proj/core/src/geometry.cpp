#include "poselab/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>

namespace poselab {

bool Pose::rotation_valid(double tol) const {
    const Eigen::Matrix3d err = R.transpose() * R - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() < tol && std::abs(R.determinant() - 1.0) < tol;
}

Eigen::Vector2d project_point(const Eigen::Vector3d& p_model, const Pose& pose,
                              const Intrinsics& K) {
    const Eigen::Vector3d pc = pose.apply(p_model);
    if (pc.z() <= 0.0)
        throw std::domain_error("project: non-positive depth " + std::to_string(pc.z()) +
                                " for point (" + std::to_string(p_model.x()) + ", " +
                                std::to_string(p_model.y()) + ", " + std::to_string(p_model.z()) +
                                ")");
    return {K.fx * pc.x() / pc.z() + K.cx, K.fy * pc.y() / pc.z() + K.cy};
}

std::vector<Eigen::Vector2d> project(std::span<const Eigen::Vector3d> points, const Pose& pose,
                                     const Intrinsics& K) {
    std::vector<Eigen::Vector2d> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(project_point(p, pose, K));
    return out;
}

PointCloud backproject(std::span<const float> depth_mm, std::span<const std::uint8_t> mask,
                       int width, int height, const Intrinsics& K) {
    PointCloud cloud;
    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            const std::size_t i = std::size_t(v) * width + u;
            if (!mask[i]) continue;
            const double d = depth_mm[i];
            if (d <= 0.0) continue;
            cloud.emplace_back((u - K.cx) * d / K.fx, (v - K.cy) * d / K.fy, d);
        }
    }
    return cloud;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& M) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d R = svd.matrixU() * svd.matrixV().transpose();
    if (R.determinant() < 0) {
        Eigen::Matrix3d U = svd.matrixU();
        U.col(2) *= -1.0;
        R = U * svd.matrixV().transpose();
    }
    return R;
}

double rotation_angle(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb) {
    const double c = ((Ra.transpose() * Rb).trace() - 1.0) / 2.0;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace poselab
