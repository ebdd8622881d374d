#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "poselab/anchors.hpp"
#include "poselab/geometry.hpp"
#include "poselab/image.hpp"
#include "poselab/mesh.hpp"

namespace poselab {

struct SceneObject {
    int class_id = 0;
    Pose pose;
    Box2D box;  // tight bounds of the projected mesh, clamped to the image
    Mask mask;  // full image resolution
    Corners2D corners;  // projected 3D bounding-box corners, px
};

struct SceneSample {
    int image_id = 0;
    ImageRGB rgb;
    std::optional<DepthImage> depth;
    Intrinsics K;
    std::vector<SceneObject> objects;
};

struct SynthConfig {
    int width = 256, height = 192;
    Intrinsics K{280.0, 280.0, 128.0, 96.0};
    int min_objects = 1, max_objects = 4;
    double min_distance_mm = 600.0, max_distance_mm = 1200.0;
    double min_elevation_rad = -1.0, max_elevation_rad = 1.0;
    bool with_depth = true;
    int max_retries = 50;
};

/// Renders flat-shaded scenes of the given meshes onto randomized
/// backgrounds via a z-buffer rasterizer. Deterministic given seed.
std::vector<SceneSample> synth_generate(const std::vector<MeshModel>& meshes, int n,
                                        const SynthConfig& cfg, std::uint64_t seed);

/// Rasterizes posed meshes into rgb/depth/per-object masks. Exposed for
/// dataset tooling and tests.
void rasterize_scene(const std::vector<MeshModel>& meshes, const std::vector<int>& mesh_index,
                     const std::vector<Pose>& poses, const Intrinsics& K, ImageRGB& rgb,
                     DepthImage& depth, std::vector<Mask>& masks);

}  // namespace poselab
