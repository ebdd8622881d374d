#include "poselab/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace poselab {

Box3D box3d_from_extents(const Eigen::Vector3d& min_pt, const Eigen::Vector3d& max_pt) {
    Box3D corners;
    for (int k = 0; k < 8; ++k) {
        for (int a = 0; a < 3; ++a)
            corners[k][a] = (k >> a) & 1 ? max_pt[a] : min_pt[a];
    }
    return corners;
}

std::vector<Anchor> generate_anchors(int image_w, int image_h, const AnchorSpec& spec) {
    if (image_w % 32 != 0 || image_h % 32 != 0)
        throw std::invalid_argument("generate_anchors: image extents " + std::to_string(image_w) +
                                    "x" + std::to_string(image_h) + " must be divisible by 32");
    std::vector<Anchor> anchors;
    for (int level = 0; level < 3; ++level) {
        const int stride = kPyramidStrides[level];
        const int gw = image_w / stride;
        const int gh = image_h / stride;
        anchors.reserve(anchors.size() +
                        std::size_t(gw) * gh * spec.scales.size() * spec.ratios.size());
        for (int i = 0; i < gh; ++i) {
            for (int j = 0; j < gw; ++j) {
                const double cx = (j + 0.5) * stride;
                const double cy = (i + 0.5) * stride;
                for (double scale : spec.scales) {
                    for (double ratio : spec.ratios) {
                        const double side = spec.base_sizes[level] * scale;
                        const double w = side / std::sqrt(ratio);
                        const double h = side * std::sqrt(ratio);
                        anchors.push_back(
                            {{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2}, level});
                    }
                }
            }
        }
    }
    return anchors;
}

double iou(const Box2D& a, const Box2D& b) {
    const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::array<double, 16> encode_correspondences(const Corners2D& corners, const Anchor& anchor) {
    std::array<double, 16> out{};
    const double w = anchor.box.width();
    const double h = anchor.box.height();
    for (int i = 0; i < 8; ++i) {
        out[2 * i] = (corners[i].x() - anchor.box.x1) / w;
        out[2 * i + 1] = (corners[i].y() - anchor.box.y1) / h;
    }
    return out;
}

Corners2D decode_correspondences(const std::array<double, 16>& values, const Anchor& anchor) {
    Corners2D out;
    const double w = anchor.box.width();
    const double h = anchor.box.height();
    for (int i = 0; i < 8; ++i) {
        out[i].x() = anchor.box.x1 + values[2 * i] * w;
        out[i].y() = anchor.box.y1 + values[2 * i + 1] * h;
    }
    return out;
}

TargetAssignment assign_targets(const std::vector<Anchor>& anchors,
                                const std::vector<GroundTruthObject>& gt) {
    if (anchors.empty()) throw std::invalid_argument("assign_targets: empty anchor list");
    TargetAssignment out;
    out.labels.assign(anchors.size(), -1);
    out.gt_index.assign(anchors.size(), -1);
    out.targets.assign(anchors.size(), {});
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        double best = 0.5;  // strictly greater than 0.5 required
        int best_gt = -1;
        for (std::size_t g = 0; g < gt.size(); ++g) {
            const double v = iou(anchors[a].box, gt[g].box);
            if (v > best) {
                best = v;
                best_gt = int(g);
            }
        }
        if (best_gt >= 0) {
            out.labels[a] = gt[best_gt].class_id;
            out.gt_index[a] = best_gt;
            out.targets[a] = encode_correspondences(gt[best_gt].corners, anchors[a]);
            ++out.num_positive;
        }
    }
    return out;
}

}  // namespace poselab
