#include "poselab/bop.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poselab/png_io.hpp"

namespace poselab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string pad6(int v) {
    std::ostringstream os;
    os << std::setw(6) << std::setfill('0') << v;
    return os.str();
}

json load_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("bop: missing file: " + path.string());
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("bop: malformed json in " + path.string() + ": " + e.what());
    }
    return j;
}

const MeshModel& mesh_for(const std::vector<MeshModel>& meshes, int obj_id,
                          const std::string& context) {
    for (const auto& m : meshes)
        if (m.class_id == obj_id) return m;
    throw std::runtime_error("bop: no mesh for obj_id " + std::to_string(obj_id) + " (" + context +
                             ")");
}

}  // namespace

std::vector<SceneSample> load_bop_scene(const std::string& root, int scene_id,
                                        const std::vector<MeshModel>& meshes) {
    const fs::path scene_dir = fs::path(root) / pad6(scene_id);
    const json cameras = load_json(scene_dir / "scene_camera.json");
    const json gts = load_json(scene_dir / "scene_gt.json");

    std::vector<int> image_ids;
    for (auto it = cameras.begin(); it != cameras.end(); ++it)
        image_ids.push_back(std::stoi(it.key()));
    std::sort(image_ids.begin(), image_ids.end());

    std::vector<SceneSample> samples;
    for (int im_id : image_ids) {
        const std::string key = std::to_string(im_id);
        const json& cam = cameras.at(key);
        SceneSample s;
        s.image_id = im_id;
        try {
            const auto& kk = cam.at("cam_K");
            s.K = {kk.at(0).get<double>(), kk.at(4).get<double>(), kk.at(2).get<double>(),
                   kk.at(5).get<double>()};
        } catch (const std::exception& e) {
            throw std::runtime_error("bop: malformed cam_K for image " + key + " in " +
                                     (scene_dir / "scene_camera.json").string());
        }
        const double depth_scale = cam.value("depth_scale", 1.0);

        int w = 0, h = 0;
        const fs::path rgb_path = scene_dir / "rgb" / (pad6(im_id) + ".png");
        if (!fs::exists(rgb_path)) throw std::runtime_error("bop: missing file: " + rgb_path.string());
        const auto rgb8 = read_png_rgb8(rgb_path.string(), w, h);
        s.rgb = ImageRGB(w, h);
        for (std::size_t i = 0; i < rgb8.size(); ++i) s.rgb.px[i] = rgb8[i] / 255.0f;

        const fs::path depth_path = scene_dir / "depth" / (pad6(im_id) + ".png");
        if (fs::exists(depth_path)) {
            int dw = 0, dh = 0;
            const auto d16 = read_png_gray16(depth_path.string(), dw, dh);
            DepthImage depth(dw, dh);
            for (std::size_t i = 0; i < d16.size(); ++i)
                depth.mm[i] = float(d16[i] * depth_scale);
            s.depth = std::move(depth);
        }

        if (!gts.contains(key))
            throw std::runtime_error("bop: scene_gt.json has no entry for image " + key);
        int gt_idx = 0;
        for (const auto& g : gts.at(key)) {
            SceneObject obj;
            try {
                obj.class_id = g.at("obj_id").get<int>();
                const auto& R = g.at("cam_R_m2c");
                const auto& t = g.at("cam_t_m2c");
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c) obj.pose.R(r, c) = R.at(3 * r + c).get<double>();
                for (int r = 0; r < 3; ++r) obj.pose.t[r] = t.at(r).get<double>();
            } catch (const std::exception&) {
                throw std::runtime_error("bop: malformed ground-truth record for image " + key +
                                         " in " + (scene_dir / "scene_gt.json").string());
            }
            const MeshModel& mesh = mesh_for(meshes, obj.class_id, "image " + key);

            const fs::path mask_path =
                scene_dir / "mask_visib" / (pad6(im_id) + "_" + pad6(gt_idx) + ".png");
            if (fs::exists(mask_path)) {
                int mw = 0, mh = 0;
                auto m8 = read_png_gray8(mask_path.string(), mw, mh);
                for (auto& v : m8) v = v > 0 ? 1 : 0;
                obj.mask = std::move(m8);
            } else {
                ImageRGB scratch(w, h);
                DepthImage dscratch(w, h);
                std::vector<Mask> masks;
                rasterize_scene({mesh}, {0}, {obj.pose}, s.K, scratch, dscratch, masks);
                obj.mask = std::move(masks[0]);
            }

            const auto projected = project(mesh.bounding_box(), obj.pose, s.K);
            for (int k = 0; k < 8; ++k) obj.corners[k] = projected[k];
            Box2D box{1e30, 1e30, -1e30, -1e30};
            for (const auto& vtx : mesh.vertices) {
                const Eigen::Vector2d uv = project_point(vtx, obj.pose, s.K);
                box.x1 = std::min(box.x1, uv.x());
                box.y1 = std::min(box.y1, uv.y());
                box.x2 = std::max(box.x2, uv.x());
                box.y2 = std::max(box.y2, uv.y());
            }
            box.x1 = std::clamp(box.x1, 0.0, double(w));
            box.x2 = std::clamp(box.x2, 0.0, double(w));
            box.y1 = std::clamp(box.y1, 0.0, double(h));
            box.y2 = std::clamp(box.y2, 0.0, double(h));
            obj.box = box;
            s.objects.push_back(std::move(obj));
            ++gt_idx;
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

void save_bop_scene(const std::string& root, int scene_id,
                    const std::vector<SceneSample>& samples) {
    const fs::path scene_dir = fs::path(root) / pad6(scene_id);
    fs::create_directories(scene_dir / "rgb");
    fs::create_directories(scene_dir / "mask_visib");
    const double depth_scale = 0.1;

    json cameras, gts;
    for (const auto& s : samples) {
        const std::string key = std::to_string(s.image_id);
        cameras[key] = {
            {"cam_K",
             {s.K.fx, 0.0, s.K.cx, 0.0, s.K.fy, s.K.cy, 0.0, 0.0, 1.0}},
            {"depth_scale", depth_scale},
        };
        json gt_list = json::array();
        int gt_idx = 0;
        for (const auto& obj : s.objects) {
            json g;
            g["obj_id"] = obj.class_id;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) g["cam_R_m2c"].push_back(obj.pose.R(r, c));
            for (int r = 0; r < 3; ++r) g["cam_t_m2c"].push_back(obj.pose.t[r]);
            gt_list.push_back(g);

            std::vector<std::uint8_t> m(obj.mask.size());
            for (std::size_t i = 0; i < m.size(); ++i) m[i] = obj.mask[i] ? 255 : 0;
            write_png_gray8(
                (scene_dir / "mask_visib" / (pad6(s.image_id) + "_" + pad6(gt_idx) + ".png"))
                    .string(),
                s.rgb.width, s.rgb.height, m);
            ++gt_idx;
        }
        gts[key] = gt_list;

        std::vector<std::uint8_t> rgb8(s.rgb.px.size());
        for (std::size_t i = 0; i < rgb8.size(); ++i)
            rgb8[i] = std::uint8_t(std::lround(std::clamp(s.rgb.px[i], 0.f, 1.f) * 255.f));
        write_png_rgb8((scene_dir / "rgb" / (pad6(s.image_id) + ".png")).string(), s.rgb.width,
                       s.rgb.height, rgb8);

        if (s.depth) {
            fs::create_directories(scene_dir / "depth");
            std::vector<std::uint16_t> d16(s.depth->mm.size());
            for (std::size_t i = 0; i < d16.size(); ++i)
                d16[i] = std::uint16_t(
                    std::clamp(std::lround(s.depth->mm[i] / depth_scale), 0l, 65535l));
            write_png_gray16((scene_dir / "depth" / (pad6(s.image_id) + ".png")).string(),
                             s.depth->width, s.depth->height, d16);
        }
    }

    std::ofstream(scene_dir / "scene_camera.json") << cameras.dump(1) << "\n";
    std::ofstream(scene_dir / "scene_gt.json") << gts.dump(1) << "\n";
}

void write_result_file(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write result file: " + path);
    f << "scene_id,im_id,obj_id,score,R,t,time\n";
    f << std::setprecision(9);
    for (const auto& r : rows) {
        f << r.scene_id << "," << r.image_id << "," << r.object_id << "," << r.score << ",";
        for (int i = 0; i < 9; ++i) f << (i ? " " : "") << r.pose.R(i / 3, i % 3);
        f << ",";
        for (int i = 0; i < 3; ++i) f << (i ? " " : "") << r.pose.t[i];
        f << "," << r.time_s << "\n";
    }
}

}  // namespace poselab
