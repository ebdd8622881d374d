// EPnP direct solve with a homography-based path for planar point sets.

#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "poselab/geometry.hpp"

namespace poselab {
namespace {

constexpr std::array<std::array<int, 2>, 6> kCtrlPairs = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

double reprojection_rmse(std::span<const Correspondence> corrs, const Intrinsics& K,
                         const Pose& pose) {
    double sum = 0;
    for (const auto& c : corrs) {
        const Eigen::Vector3d pc = pose.apply(c.p3d);
        if (pc.z() <= 1e-9) return std::numeric_limits<double>::infinity();
        const Eigen::Vector2d uv(K.fx * pc.x() / pc.z() + K.cx, K.fy * pc.y() / pc.z() + K.cy);
        sum += (uv - c.uv).squaredNorm();
    }
    return std::sqrt(sum / double(corrs.size()));
}

Pose rigid_from_point_pairs(const std::vector<Eigen::Vector3d>& src,
                            const std::vector<Eigen::Vector3d>& dst) {
    Eigen::Vector3d cs = Eigen::Vector3d::Zero(), cd = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        cs += src[i];
        cd += dst[i];
    }
    cs /= double(src.size());
    cd /= double(dst.size());
    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) H += (src[i] - cs) * (dst[i] - cd).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) D(2, 2) = -1.0;
    Pose pose;
    pose.R = svd.matrixV() * D * svd.matrixU().transpose();
    pose.t = cd - pose.R * cs;
    return pose;
}

// ---- planar path: DLT homography + decomposition ----

std::optional<Pose> solve_planar(std::span<const Correspondence> corrs, const Intrinsics& K,
                                 const Eigen::Vector3d& centroid, const Eigen::Matrix3d& axes) {
    const std::size_t n = corrs.size();
    const Eigen::Vector3d e1 = axes.col(0), e2 = axes.col(1), nrm = axes.col(2);

    // plane coords and normalized image coords, scaled for conditioning
    std::vector<Eigen::Vector2d> q(n), x(n);
    double qs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d d = corrs[i].p3d - centroid;
        q[i] = {e1.dot(d), e2.dot(d)};
        x[i] = {(corrs[i].uv.x() - K.cx) / K.fx, (corrs[i].uv.y() - K.cy) / K.fy};
        qs += q[i].norm();
    }
    qs = qs > 1e-12 ? qs / double(n) : 1.0;
    for (auto& v : q) v /= qs;

    Eigen::MatrixXd A(2 * n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const double qx = q[i].x(), qy = q[i].y();
        A.row(2 * i) << qx, qy, 1, 0, 0, 0, -x[i].x() * qx, -x[i].x() * qy, -x[i].x();
        A.row(2 * i + 1) << 0, 0, 0, qx, qy, 1, -x[i].y() * qx, -x[i].y() * qy, -x[i].y();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    Eigen::Matrix3d H;
    const Eigen::VectorXd h = svd.matrixV().col(8);
    H << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    // undo plane scaling: columns 1,2 map scaled plane coords
    H.col(0) /= qs;
    H.col(1) /= qs;

    const double norm1 = H.col(0).norm(), norm2 = H.col(1).norm();
    if (norm1 < 1e-12 || norm2 < 1e-12) return std::nullopt;
    double lambda = 2.0 / (norm1 + norm2);
    // points must end up in front of the camera: z_i = lambda * H.row(2) . (qx, qy, 1)
    double zsum = 0;
    for (std::size_t i = 0; i < n; ++i)
        zsum += H(2, 0) * q[i].x() * qs + H(2, 1) * q[i].y() * qs + H(2, 2);
    if (lambda * zsum < 0) lambda = -lambda;

    const Eigen::Vector3d r1 = lambda * H.col(0);
    const Eigen::Vector3d r2 = lambda * H.col(1);
    Eigen::Matrix3d Rp;
    Rp.col(0) = r1;
    Rp.col(1) = r2;
    Rp.col(2) = r1.cross(r2);
    Rp = orthonormalize(Rp);

    Eigen::Matrix3d B;
    B.col(0) = e1;
    B.col(1) = e2;
    B.col(2) = nrm;
    Pose pose;
    pose.R = orthonormalize(Rp * B.transpose());
    pose.t = lambda * H.col(2) - pose.R * centroid;

    // depth check on the actual points
    double zmin = std::numeric_limits<double>::infinity();
    for (const auto& c : corrs) zmin = std::min(zmin, pose.apply(c.p3d).z());
    if (zmin <= 0) return std::nullopt;
    return pose;
}

// ---- EPnP proper ----

struct EpnpWork {
    std::vector<Eigen::Vector3d> pws;
    std::array<Eigen::Vector3d, 4> cws;      // world control points
    Eigen::MatrixXd alphas;                  // n x 4
    Eigen::Matrix<double, 12, 4> V;          // null-space basis, col 0 = smallest eigenvalue
    Eigen::Matrix<double, 6, 10> L;
    Eigen::Matrix<double, 6, 1> rho;
};

Eigen::Vector3d ctrl_cam(const Eigen::Matrix<double, 12, 4>& V, const Eigen::Vector4d& betas,
                         int i) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (int k = 0; k < 4; ++k) c += betas[k] * V.block<3, 1>(3 * i, k);
    return c;
}

Eigen::Matrix<double, 10, 1> beta_products(const Eigen::Vector4d& b) {
    Eigen::Matrix<double, 10, 1> p;
    p << b[0] * b[0], b[0] * b[1], b[1] * b[1], b[0] * b[2], b[1] * b[2], b[2] * b[2], b[0] * b[3],
        b[1] * b[3], b[2] * b[3], b[3] * b[3];
    return p;
}

void gauss_newton_betas(const EpnpWork& w, Eigen::Vector4d& betas) {
    for (int iter = 0; iter < 5; ++iter) {
        Eigen::Matrix<double, 6, 4> J;
        const Eigen::Matrix<double, 6, 1> res = w.rho - w.L * beta_products(betas);
        for (int r = 0; r < 6; ++r) {
            const auto& l = w.L.row(r);
            J(r, 0) = 2 * l[0] * betas[0] + l[1] * betas[1] + l[3] * betas[2] + l[6] * betas[3];
            J(r, 1) = l[1] * betas[0] + 2 * l[2] * betas[1] + l[4] * betas[2] + l[7] * betas[3];
            J(r, 2) = l[3] * betas[0] + l[4] * betas[1] + 2 * l[5] * betas[2] + l[8] * betas[3];
            J(r, 3) = l[6] * betas[0] + l[7] * betas[1] + l[8] * betas[2] + 2 * l[9] * betas[3];
        }
        betas += J.colPivHouseholderQr().solve(res);
    }
}

Pose pose_from_betas(const EpnpWork& w, const Eigen::Vector4d& betas) {
    std::array<Eigen::Vector3d, 4> ccs;
    for (int i = 0; i < 4; ++i) ccs[i] = ctrl_cam(w.V, betas, i);
    std::vector<Eigen::Vector3d> pcs(w.pws.size());
    double zsum = 0;
    for (std::size_t i = 0; i < w.pws.size(); ++i) {
        pcs[i] = Eigen::Vector3d::Zero();
        for (int j = 0; j < 4; ++j) pcs[i] += w.alphas(i, j) * ccs[j];
        zsum += pcs[i].z();
    }
    if (zsum < 0)
        for (auto& p : pcs) p = -p;
    return rigid_from_point_pairs(w.pws, pcs);
}

}  // namespace

std::optional<Pose> solve_pnp(std::span<const Correspondence> corrs, const Intrinsics& K) {
    const std::size_t n = corrs.size();
    if (n < 4) return std::nullopt;

    EpnpWork w;
    w.pws.reserve(n);
    for (const auto& c : corrs) w.pws.push_back(c.p3d);

    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : w.pws) centroid += p;
    centroid /= double(n);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : w.pws) cov += (p - centroid) * (p - centroid).transpose();
    cov /= double(n);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    const Eigen::Vector3d evals = es.eigenvalues();  // ascending
    if (evals[2] < 1e-12) return std::nullopt;       // all points coincident / collinear

    if (evals[0] / evals[2] < 1e-6) {
        // planar configuration; eigenvectors ascending, so the in-plane
        // axes are columns 2 and 1, the normal column 0
        Eigen::Matrix3d axes;
        axes.col(0) = es.eigenvectors().col(2);
        axes.col(1) = es.eigenvectors().col(1);
        axes.col(2) = axes.col(0).cross(axes.col(1));
        return solve_planar(corrs, K, centroid, axes);
    }

    // control points: centroid + principal axes
    w.cws[0] = centroid;
    for (int i = 0; i < 3; ++i)
        w.cws[i + 1] = centroid + std::sqrt(evals[2 - i]) * es.eigenvectors().col(2 - i);

    // barycentric coordinates
    Eigen::Matrix3d CC;
    for (int i = 0; i < 3; ++i) CC.col(i) = w.cws[i + 1] - w.cws[0];
    const Eigen::Matrix3d CCinv = CC.inverse();
    w.alphas.resize(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d a = CCinv * (w.pws[i] - w.cws[0]);
        w.alphas(i, 1) = a[0];
        w.alphas(i, 2) = a[1];
        w.alphas(i, 3) = a[2];
        w.alphas(i, 0) = 1.0 - a.sum();
    }

    // M matrix and its null-space basis
    Eigen::MatrixXd M(2 * n, 12);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = corrs[i].uv.x(), v = corrs[i].uv.y();
        for (int j = 0; j < 4; ++j) {
            const double a = w.alphas(i, j);
            M(2 * i, 3 * j) = a * K.fx;
            M(2 * i, 3 * j + 1) = 0;
            M(2 * i, 3 * j + 2) = a * (K.cx - u);
            M(2 * i + 1, 3 * j) = 0;
            M(2 * i + 1, 3 * j + 1) = a * K.fy;
            M(2 * i + 1, 3 * j + 2) = a * (K.cy - v);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mes(M.transpose() * M);
    for (int k = 0; k < 4; ++k) w.V.col(k) = mes.eigenvectors().col(k);  // ascending

    // L * beta-products = rho (squared control-point distances)
    for (int r = 0; r < 6; ++r) {
        const int a = kCtrlPairs[r][0], b = kCtrlPairs[r][1];
        w.rho[r] = (w.cws[a] - w.cws[b]).squaredNorm();
        Eigen::Vector3d dv[4];
        for (int k = 0; k < 4; ++k)
            dv[k] = w.V.block<3, 1>(3 * a, k) - w.V.block<3, 1>(3 * b, k);
        w.L(r, 0) = dv[0].dot(dv[0]);
        w.L(r, 1) = 2 * dv[0].dot(dv[1]);
        w.L(r, 2) = dv[1].dot(dv[1]);
        w.L(r, 3) = 2 * dv[0].dot(dv[2]);
        w.L(r, 4) = 2 * dv[1].dot(dv[2]);
        w.L(r, 5) = dv[2].dot(dv[2]);
        w.L(r, 6) = 2 * dv[0].dot(dv[3]);
        w.L(r, 7) = 2 * dv[1].dot(dv[3]);
        w.L(r, 8) = 2 * dv[2].dot(dv[3]);
        w.L(r, 9) = dv[3].dot(dv[3]);
    }

    // three standard initializations, each polished by Gauss-Newton
    std::array<Eigen::Vector4d, 3> inits;
    {
        Eigen::Matrix<double, 6, 4> L4;
        L4 << w.L.col(0), w.L.col(1), w.L.col(3), w.L.col(6);
        const Eigen::Vector4d b4 = L4.colPivHouseholderQr().solve(w.rho);
        Eigen::Vector4d b;
        if (b4[0] < 0)
            b << std::sqrt(-b4[0]), -b4[1] / std::sqrt(-b4[0]), -b4[2] / std::sqrt(-b4[0]),
                -b4[3] / std::sqrt(-b4[0]);
        else
            b << std::sqrt(b4[0]), b4[1] / std::sqrt(b4[0]), b4[2] / std::sqrt(b4[0]),
                b4[3] / std::sqrt(b4[0]);
        inits[0] = b;
    }
    {
        Eigen::Matrix<double, 6, 3> L3;
        L3 << w.L.col(0), w.L.col(1), w.L.col(2);
        const Eigen::Vector3d b3 = L3.colPivHouseholderQr().solve(w.rho);
        Eigen::Vector4d b = Eigen::Vector4d::Zero();
        if (b3[0] < 0) {
            b[0] = std::sqrt(-b3[0]);
            b[1] = b3[2] < 0 ? std::sqrt(-b3[2]) : 0.0;
        } else {
            b[0] = std::sqrt(b3[0]);
            b[1] = b3[2] > 0 ? std::sqrt(b3[2]) : 0.0;
        }
        if (b3[1] < 0) b[0] = -b[0];
        inits[1] = b;
    }
    {
        Eigen::Matrix<double, 6, 5> L5;
        L5 << w.L.col(0), w.L.col(1), w.L.col(2), w.L.col(3), w.L.col(4);
        const Eigen::Matrix<double, 5, 1> b5 = L5.colPivHouseholderQr().solve(w.rho);
        Eigen::Vector4d b = Eigen::Vector4d::Zero();
        if (b5[0] < 0) {
            b[0] = std::sqrt(-b5[0]);
            b[1] = b5[2] < 0 ? std::sqrt(-b5[2]) : 0.0;
        } else {
            b[0] = std::sqrt(b5[0]);
            b[1] = b5[2] > 0 ? std::sqrt(b5[2]) : 0.0;
        }
        if (b5[1] < 0) b[0] = -b[0];
        if (std::abs(b[0]) > 1e-12) b[2] = b5[3] / b[0];
        inits[2] = b;
    }

    Pose best;
    double best_err = std::numeric_limits<double>::infinity();
    for (auto betas : inits) {
        if (!betas.allFinite()) continue;
        gauss_newton_betas(w, betas);
        if (!betas.allFinite()) continue;
        const Pose pose = pose_from_betas(w, betas);
        const double err = reprojection_rmse(corrs, K, pose);
        if (err < best_err) {
            best_err = err;
            best = pose;
        }
    }
    if (!std::isfinite(best_err)) return std::nullopt;
    best.R = orthonormalize(best.R);
    return best;
}

}  // namespace poselab
