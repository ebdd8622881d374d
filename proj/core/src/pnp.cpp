// RANSAC over minimal PnP solves plus Levenberg-Marquardt refit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "poselab/geometry.hpp"

namespace poselab {
namespace {

constexpr int kMinConsensus = 6;

double reproj_error_px(const Correspondence& c, const Intrinsics& K, const Pose& pose) {
    const Eigen::Vector3d pc = pose.apply(c.p3d);
    if (pc.z() <= 1e-9) return std::numeric_limits<double>::infinity();
    const Eigen::Vector2d uv(K.fx * pc.x() / pc.z() + K.cx, K.fy * pc.y() / pc.z() + K.cy);
    return (uv - c.uv).norm();
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& w) {
    const double theta = w.norm();
    if (theta < 1e-12) return Eigen::Matrix3d::Identity();
    return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Eigen::VectorXd residuals(std::span<const Correspondence> corrs, const Intrinsics& K,
                          const Eigen::Matrix<double, 6, 1>& x) {
    const Eigen::Matrix3d R = rodrigues(x.head<3>());
    const Eigen::Vector3d t = x.tail<3>();
    Eigen::VectorXd r(2 * corrs.size());
    for (std::size_t i = 0; i < corrs.size(); ++i) {
        const Eigen::Vector3d pc = R * corrs[i].p3d + t;
        const double z = std::max(pc.z(), 1e-6);
        r[2 * i] = K.fx * pc.x() / z + K.cx - corrs[i].uv.x();
        r[2 * i + 1] = K.fy * pc.y() / z + K.cy - corrs[i].uv.y();
    }
    return r;
}

}  // namespace

Pose refine_pose_lm(std::span<const Correspondence> corrs, const Intrinsics& K, const Pose& init,
                    int max_iters) {
    Eigen::Matrix<double, 6, 1> x;
    const Eigen::AngleAxisd aa(init.R);
    x.head<3>() = aa.angle() * aa.axis();
    x.tail<3>() = init.t;

    double lambda = 1e-3;
    Eigen::VectorXd r = residuals(corrs, K, x);
    double cost = r.squaredNorm();
    for (int iter = 0; iter < max_iters; ++iter) {
        // central-difference Jacobian; 6 parameters, cheap
        Eigen::MatrixXd J(r.size(), 6);
        for (int j = 0; j < 6; ++j) {
            const double step = 1e-6 * std::max(1.0, std::abs(x[j]));
            Eigen::Matrix<double, 6, 1> xp = x, xm = x;
            xp[j] += step;
            xm[j] -= step;
            J.col(j) = (residuals(corrs, K, xp) - residuals(corrs, K, xm)) / (2 * step);
        }
        const Eigen::Matrix<double, 6, 6> JtJ = J.transpose() * J;
        const Eigen::Matrix<double, 6, 1> Jtr = J.transpose() * r;
        bool stepped = false;
        for (int attempt = 0; attempt < 10; ++attempt) {
            Eigen::Matrix<double, 6, 6> A = JtJ;
            A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
            const Eigen::Matrix<double, 6, 1> dx = A.ldlt().solve(-Jtr);
            const Eigen::Matrix<double, 6, 1> xn = x + dx;
            const Eigen::VectorXd rn = residuals(corrs, K, xn);
            if (rn.squaredNorm() < cost) {
                x = xn;
                r = rn;
                cost = rn.squaredNorm();
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) break;
        if (cost < 1e-18) break;
    }

    Pose out;
    out.R = orthonormalize(rodrigues(x.head<3>()));
    out.t = x.tail<3>();
    return out;
}

std::optional<PnPResult> ransac_pnp(std::span<const Correspondence> corrs, const Intrinsics& K,
                                    const RansacConfig& cfg) {
    if (corrs.size() < std::size_t(kMinConsensus))
        throw std::invalid_argument("ransac_pnp: need at least 6 correspondences, got " +
                                    std::to_string(corrs.size()));

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, corrs.size() - 1);

    Pose best_pose;
    int best_count = 0;
    double best_err = std::numeric_limits<double>::infinity();
    std::vector<Correspondence> sample(std::size_t(cfg.sample_size));

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        // sample distinct indices
        std::vector<std::size_t> idx;
        while (idx.size() < std::size_t(cfg.sample_size)) {
            const std::size_t i = pick(rng);
            if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
        }
        for (std::size_t i = 0; i < idx.size(); ++i) sample[i] = corrs[idx[i]];
        const auto pose = solve_pnp(sample, K);
        if (!pose) continue;
        int count = 0;
        double err_sum = 0;
        for (const auto& c : corrs) {
            const double e = reproj_error_px(c, K, *pose);
            if (e <= cfg.inlier_px) {
                ++count;
                err_sum += e;
            }
        }
        if (count > best_count || (count == best_count && err_sum < best_err)) {
            best_count = count;
            best_err = err_sum;
            best_pose = *pose;
        }
    }

    if (best_count < kMinConsensus) return std::nullopt;

    std::vector<Correspondence> consensus;
    for (const auto& c : corrs)
        if (reproj_error_px(c, K, best_pose) <= cfg.inlier_px) consensus.push_back(c);

    PnPResult result;
    result.pose = refine_pose_lm(consensus, K, best_pose);
    for (std::size_t i = 0; i < corrs.size(); ++i)
        if (reproj_error_px(corrs[i], K, result.pose) <= cfg.inlier_px)
            result.inliers.push_back(int(i));
    if (result.inliers.size() < std::size_t(kMinConsensus)) return std::nullopt;
    return result;
}

}  // namespace poselab
