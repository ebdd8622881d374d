#pragma once

#include <string>
#include <vector>

#include "poselab/mesh.hpp"
#include "poselab/synth.hpp"

namespace poselab {

// Directory convention per scene (ids zero-padded to 6 digits):
//   <root>/<scene>/scene_camera.json   per-image 3x3 row-major cam_K + depth_scale
//   <root>/<scene>/scene_gt.json       per-image list of cam_R_m2c (9, row-major),
//                                      cam_t_m2c (mm), obj_id
//   <root>/<scene>/rgb/<image>.png     8-bit RGB
//   <root>/<scene>/depth/<image>.png   16-bit, mm = value * depth_scale
//   <root>/<scene>/mask_visib/<image>_<gt index>.png

/// Loads a scene; masks are taken from mask_visib when present, else
/// derived by rasterizing the given meshes.
std::vector<SceneSample> load_bop_scene(const std::string& root, int scene_id,
                                        const std::vector<MeshModel>& meshes);

/// Persists samples in the same convention (depth_scale 0.1).
void save_bop_scene(const std::string& root, int scene_id,
                    const std::vector<SceneSample>& samples);

/// BOP result-file row convention:
/// scene_id,im_id,obj_id,score,R (9 values),t (3 values),time.
struct ResultRow {
    int scene_id = 0;
    int image_id = 0;
    int object_id = 0;
    double score = 0;
    Pose pose;
    double time_s = 0;
};

void write_result_file(const std::string& path, const std::vector<ResultRow>& rows);

}  // namespace poselab
