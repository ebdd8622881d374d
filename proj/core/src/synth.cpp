#include "poselab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace poselab {
namespace {

// distinct flat colors per class, shaded by face orientation
const double kPalette[][3] = {
    {0.85, 0.25, 0.2}, {0.2, 0.55, 0.85}, {0.25, 0.8, 0.3},  {0.9, 0.75, 0.2},
    {0.7, 0.3, 0.8},   {0.2, 0.8, 0.75}, {0.95, 0.5, 0.15}, {0.6, 0.6, 0.6},
};
constexpr int kPaletteSize = 8;

struct ScreenVertex {
    double u, v, z;  // px, px, camera depth mm
};

}  // namespace

void rasterize_scene(const std::vector<MeshModel>& meshes, const std::vector<int>& mesh_index,
                     const std::vector<Pose>& poses, const Intrinsics& K, ImageRGB& rgb,
                     DepthImage& depth, std::vector<Mask>& masks) {
    const int W = rgb.width, H = rgb.height;
    std::vector<int> owner(std::size_t(W) * H, -1);
    std::vector<double> zbuf(std::size_t(W) * H, std::numeric_limits<double>::infinity());

    for (std::size_t oi = 0; oi < poses.size(); ++oi) {
        const MeshModel& mesh = meshes[mesh_index[oi]];
        const Pose& pose = poses[oi];
        const double* base = kPalette[mesh.class_id % kPaletteSize];

        std::vector<ScreenVertex> sv(mesh.vertices.size());
        std::vector<Eigen::Vector3d> cam(mesh.vertices.size());
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
            cam[i] = pose.apply(mesh.vertices[i]);
            sv[i] = {K.fx * cam[i].x() / cam[i].z() + K.cx, K.fy * cam[i].y() / cam[i].z() + K.cy,
                     cam[i].z()};
        }

        for (const auto& f : mesh.faces) {
            if (cam[f[0]].z() <= 1.0 || cam[f[1]].z() <= 1.0 || cam[f[2]].z() <= 1.0) continue;
            const Eigen::Vector3d n =
                ((cam[f[1]] - cam[f[0]]).cross(cam[f[2]] - cam[f[0]])).normalized();
            // camera looks along +z; light from the camera
            const double shade = 0.3 + 0.7 * std::max(0.0, -n.z());

            const ScreenVertex &a = sv[f[0]], &b = sv[f[1]], &c = sv[f[2]];
            const double area = (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u);
            if (std::abs(area) < 1e-12) continue;
            const int x0 = std::max(0, int(std::floor(std::min({a.u, b.u, c.u}))));
            const int x1 = std::min(W - 1, int(std::ceil(std::max({a.u, b.u, c.u}))));
            const int y0 = std::max(0, int(std::floor(std::min({a.v, b.v, c.v}))));
            const int y1 = std::min(H - 1, int(std::ceil(std::max({a.v, b.v, c.v}))));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double px = x + 0.5, py = y + 0.5;
                    const double w0 =
                        ((b.u - a.u) * (py - a.v) - (b.v - a.v) * (px - a.u)) / area;
                    const double w1 =
                        ((px - a.u) * (c.v - a.v) - (py - a.v) * (c.u - a.u)) / area;
                    const double wa = 1.0 - w0 - w1;
                    if (wa < 0 || w1 < 0 || w0 < 0) continue;
                    // perspective-correct depth via 1/z interpolation
                    const double inv_z = wa / a.z + w1 / b.z + w0 / c.z;
                    const double z = 1.0 / inv_z;
                    const std::size_t pi = std::size_t(y) * W + x;
                    if (z >= zbuf[pi]) continue;
                    zbuf[pi] = z;
                    owner[pi] = int(oi);
                    rgb.at(x, y, 0) = float(base[0] * shade);
                    rgb.at(x, y, 1) = float(base[1] * shade);
                    rgb.at(x, y, 2) = float(base[2] * shade);
                }
            }
        }
    }

    masks.assign(poses.size(), Mask(std::size_t(W) * H, 0));
    for (std::size_t pi = 0; pi < owner.size(); ++pi) {
        if (owner[pi] < 0) continue;
        masks[owner[pi]][pi] = 1;
        depth.mm[pi] = float(zbuf[pi]);
    }
}

std::vector<SceneSample> synth_generate(const std::vector<MeshModel>& meshes, int n,
                                        const SynthConfig& cfg, std::uint64_t seed) {
    if (meshes.empty()) throw std::invalid_argument("synth_generate: no meshes");
    std::vector<SceneSample> out;
    out.reserve(n);

    for (int si = 0; si < n; ++si) {
        // per-sample stream so samples are independent of batch order
        std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + std::uint64_t(si) + 1);
        std::uniform_real_distribution<double> uni(0.0, 1.0);

        SceneSample sample;
        sample.image_id = si;
        sample.K = cfg.K;
        sample.rgb = ImageRGB(cfg.width, cfg.height);

        // background: flat color or uniform noise
        if (uni(rng) < 0.5) {
            const float r = float(uni(rng)), g = float(uni(rng)), b = float(uni(rng));
            for (int y = 0; y < cfg.height; ++y)
                for (int x = 0; x < cfg.width; ++x) {
                    sample.rgb.at(x, y, 0) = r;
                    sample.rgb.at(x, y, 1) = g;
                    sample.rgb.at(x, y, 2) = b;
                }
        } else {
            for (auto& v : sample.rgb.px) v = float(uni(rng));
        }

        const int count =
            cfg.min_objects + int(uni(rng) * (cfg.max_objects - cfg.min_objects + 1e-9));
        std::vector<int> mesh_index;
        std::vector<Pose> poses;
        for (int oi = 0; oi < count; ++oi) {
            const int mi = int(uni(rng) * meshes.size()) % int(meshes.size());
            bool placed = false;
            for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
                const double azimuth = uni(rng) * 2.0 * M_PI;
                const double elevation = cfg.min_elevation_rad +
                                         uni(rng) * (cfg.max_elevation_rad - cfg.min_elevation_rad);
                const double inplane = uni(rng) * 2.0 * M_PI;
                Pose pose;
                pose.R = (Eigen::AngleAxisd(inplane, Eigen::Vector3d::UnitZ()) *
                          Eigen::AngleAxisd(elevation, Eigen::Vector3d::UnitX()) *
                          Eigen::AngleAxisd(azimuth, Eigen::Vector3d::UnitY()))
                             .toRotationMatrix();
                const double dist = cfg.min_distance_mm +
                                    uni(rng) * (cfg.max_distance_mm - cfg.min_distance_mm);
                // aim at a random image point in the central region
                const double u = cfg.width * (0.25 + 0.5 * uni(rng));
                const double v = cfg.height * (0.25 + 0.5 * uni(rng));
                Eigen::Vector3d dir((u - cfg.K.cx) / cfg.K.fx, (v - cfg.K.cy) / cfg.K.fy, 1.0);
                pose.t = dir * dist;

                // keep the whole projected bounding box in frame
                bool inside = true;
                for (const auto& corner : meshes[mi].bounding_box()) {
                    const Eigen::Vector3d pc = pose.apply(corner);
                    if (pc.z() <= 1.0) {
                        inside = false;
                        break;
                    }
                    const double pu = cfg.K.fx * pc.x() / pc.z() + cfg.K.cx;
                    const double pv = cfg.K.fy * pc.y() / pc.z() + cfg.K.cy;
                    if (pu < 1 || pu > cfg.width - 2 || pv < 1 || pv > cfg.height - 2) {
                        inside = false;
                        break;
                    }
                }
                if (!inside) continue;
                mesh_index.push_back(mi);
                poses.push_back(pose);
                placed = true;
            }
        }

        DepthImage depth(cfg.width, cfg.height);
        std::vector<Mask> masks;
        rasterize_scene(meshes, mesh_index, poses, sample.K, sample.rgb, depth, masks);

        for (std::size_t oi = 0; oi < poses.size(); ++oi) {
            SceneObject obj;
            obj.class_id = meshes[mesh_index[oi]].class_id;
            obj.pose = poses[oi];
            obj.mask = std::move(masks[oi]);
            const Box3D bb = meshes[mesh_index[oi]].bounding_box();
            const auto projected = project(bb, obj.pose, sample.K);
            for (int k = 0; k < 8; ++k) obj.corners[k] = projected[k];
            // tight bounds of the projected mesh vertices
            Box2D box{1e30, 1e30, -1e30, -1e30};
            for (const auto& vtx : meshes[mesh_index[oi]].vertices) {
                const Eigen::Vector2d uv = project_point(vtx, obj.pose, sample.K);
                box.x1 = std::min(box.x1, uv.x());
                box.y1 = std::min(box.y1, uv.y());
                box.x2 = std::max(box.x2, uv.x());
                box.y2 = std::max(box.y2, uv.y());
            }
            box.x1 = std::clamp(box.x1, 0.0, double(cfg.width));
            box.x2 = std::clamp(box.x2, 0.0, double(cfg.width));
            box.y1 = std::clamp(box.y1, 0.0, double(cfg.height));
            box.y2 = std::clamp(box.y2, 0.0, double(cfg.height));
            obj.box = box;
            sample.objects.push_back(std::move(obj));
        }
        if (cfg.with_depth) sample.depth = std::move(depth);
        out.push_back(std::move(sample));
    }
    return out;
}

}  // namespace poselab
