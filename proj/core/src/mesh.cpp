#include "poselab/mesh.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "poselab/metrics.hpp"

namespace poselab {

Box3D MeshModel::bounding_box() const {
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (const auto& v : vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return box3d_from_extents(lo, hi);
}

MeshModel make_cuboid(int class_id, const Eigen::Vector3d& extents, bool symmetric) {
    MeshModel m;
    m.class_id = class_id;
    m.symmetric = symmetric;
    const Box3D corners = box3d_from_extents(-extents / 2, extents / 2);
    m.vertices.assign(corners.begin(), corners.end());
    // two triangles per face; vertex indices follow the bit-pattern
    // corner order of Box3D
    m.faces = {
        {0, 2, 6}, {0, 6, 4},  // x = min
        {1, 7, 3}, {1, 5, 7},  // x = max
        {0, 5, 1}, {0, 4, 5},  // y = min
        {2, 3, 7}, {2, 7, 6},  // y = max
        {0, 1, 3}, {0, 3, 2},  // z = min
        {4, 7, 5}, {4, 6, 7},  // z = max
    };
    m.diameter = model_diameter(m.vertices);
    return m;
}

PointCloud sample_surface(const MeshModel& mesh, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> areas;
    areas.reserve(mesh.faces.size());
    double total = 0;
    for (const auto& f : mesh.faces) {
        const Eigen::Vector3d a = mesh.vertices[f[0]], b = mesh.vertices[f[1]],
                              c = mesh.vertices[f[2]];
        const double area = 0.5 * ((b - a).cross(c - a)).norm();
        total += area;
        areas.push_back(total);
    }
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    PointCloud out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = uni(rng) * total;
        std::size_t fi = std::lower_bound(areas.begin(), areas.end(), pick) - areas.begin();
        if (fi >= mesh.faces.size()) fi = mesh.faces.size() - 1;
        const auto& f = mesh.faces[fi];
        double u = uni(rng), v = uni(rng);
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        out.push_back(mesh.vertices[f[0]] + u * (mesh.vertices[f[1]] - mesh.vertices[f[0]]) +
                      v * (mesh.vertices[f[2]] - mesh.vertices[f[0]]));
    }
    return out;
}

}  // namespace poselab
