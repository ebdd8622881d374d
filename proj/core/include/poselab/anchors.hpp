#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace poselab {

struct Box2D {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
};

struct Anchor {
    Box2D box;
    int level = 0;  // 0=P3, 1=P4, 2=P5
};

struct AnchorSpec {
    std::array<double, 3> base_sizes = {32.0, 64.0, 128.0};  // P3/P4/P5
    std::vector<double> scales = {1.0, 1.2599210498948732, 1.5874010519681994};  // 2^0,2^1/3,2^2/3
    std::vector<double> ratios = {0.5, 1.0, 2.0};  // h/w

    int anchors_per_location() const { return int(scales.size() * ratios.size()); }
};

inline constexpr std::array<int, 3> kPyramidStrides = {8, 16, 32};

/// Corner order of a model-frame 3D bounding box: corner k takes the max
/// extent on axis a where bit a of k is set (bit 0 = x, bit 1 = y,
/// bit 2 = z). Edges pair corners differing in exactly one bit.
using Box3D = std::array<Eigen::Vector3d, 8>;

inline constexpr std::array<std::array<int, 2>, 12> kBox3DEdges = {{
    {0, 1}, {2, 3}, {4, 5}, {6, 7},  // x edges
    {0, 2}, {1, 3}, {4, 6}, {5, 7},  // y edges
    {0, 4}, {1, 5}, {2, 6}, {3, 7},  // z edges
}};

Box3D box3d_from_extents(const Eigen::Vector3d& min_pt, const Eigen::Vector3d& max_pt);

/// Deterministic anchor enumeration: level-major, then row-major grid
/// location, then (scale, ratio).
std::vector<Anchor> generate_anchors(int image_w, int image_h, const AnchorSpec& spec);

double iou(const Box2D& a, const Box2D& b);

using Corners2D = std::array<Eigen::Vector2d, 8>;

struct GroundTruthObject {
    int class_id = 0;  // 0..K-1
    Box2D box;
    Corners2D corners;
};

struct TargetAssignment {
    std::vector<int> labels;    // -1 background, else class id
    std::vector<int> gt_index;  // -1 for background
    std::vector<std::array<double, 16>> targets;  // defined for positives
    int num_positive = 0;
};

/// IoU > 0.5 makes an anchor positive for the GT box of maximal IoU
/// (ties broken by lowest GT index); every other anchor is background.
TargetAssignment assign_targets(const std::vector<Anchor>& anchors,
                                const std::vector<GroundTruthObject>& gt);

std::array<double, 16> encode_correspondences(const Corners2D& corners, const Anchor& anchor);
Corners2D decode_correspondences(const std::array<double, 16>& values, const Anchor& anchor);

}  // namespace poselab
