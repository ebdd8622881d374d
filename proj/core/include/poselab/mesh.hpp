#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "poselab/anchors.hpp"
#include "poselab/geometry.hpp"

namespace poselab {

/// Triangle mesh in model frame, mm. Diameter equals the exact maximum
/// pairwise vertex distance.
struct MeshModel {
    int class_id = 0;
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;
    double diameter = 0;
    bool symmetric = false;

    Box3D bounding_box() const;
};

/// Axis-aligned cuboid centered at the origin.
MeshModel make_cuboid(int class_id, const Eigen::Vector3d& extents, bool symmetric = false);

/// Deterministic area-weighted surface sampling.
PointCloud sample_surface(const MeshModel& mesh, std::size_t n, std::uint64_t seed = 0);

}  // namespace poselab
