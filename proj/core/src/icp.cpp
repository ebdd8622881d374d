// Trimmed point-to-point ICP with closed-form rigid updates.

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "poselab/geometry.hpp"

namespace poselab {
namespace {

std::size_t nearest(const PointCloud& cloud, const Eigen::Vector3d& p) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double d = (cloud[i] - p).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace

IcpResult icp_refine(const PointCloud& model, const PointCloud& scene, const Pose& init,
                     const IcpConfig& cfg) {
    IcpResult out;
    out.pose = init;
    if (scene.empty() || model.empty()) return out;
    out.refined = true;

    const std::size_t keep =
        std::max<std::size_t>(3, std::size_t(std::ceil(model.size() * (1.0 - cfg.trim_fraction))));

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        out.iterations = iter + 1;

        std::vector<Eigen::Vector3d> src(model.size()), dst(model.size());
        std::vector<double> dist(model.size());
        for (std::size_t i = 0; i < model.size(); ++i) {
            src[i] = out.pose.apply(model[i]);
            dst[i] = scene[nearest(scene, src[i])];
            dist[i] = (dst[i] - src[i]).norm();
        }

        // trim the worst matches
        std::vector<std::size_t> order(model.size());
        std::iota(order.begin(), order.end(), 0);
        std::nth_element(order.begin(), order.begin() + keep - 1, order.end(),
                         [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
        order.resize(keep);

        Eigen::Vector3d cs = Eigen::Vector3d::Zero(), cd = Eigen::Vector3d::Zero();
        for (std::size_t i : order) {
            cs += src[i];
            cd += dst[i];
        }
        cs /= double(keep);
        cd /= double(keep);
        Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
        double res = 0;
        for (std::size_t i : order) {
            H += (src[i] - cs) * (dst[i] - cd).transpose();
            res += dist[i];
        }
        out.mean_residual = res / double(keep);

        Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
        if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) D(2, 2) = -1.0;
        const Eigen::Matrix3d dR = svd.matrixV() * D * svd.matrixU().transpose();
        const Eigen::Vector3d dt = cd - dR * cs;

        out.pose.R = orthonormalize(dR * out.pose.R);
        out.pose.t = dR * out.pose.t + dt;

        const double angle = rotation_angle(Eigen::Matrix3d::Identity(), dR);
        if (angle < cfg.tol && dt.norm() < cfg.tol) break;
    }
    return out;
}

}  // namespace poselab
