#include "poselab/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace poselab {
namespace {

using nlohmann::json;

json step_to_json(const AugmentationStep& s) {
    return {{"chance", s.chance},
            {"per_channel_chance", s.per_channel_chance},
            {"lo", s.lo},
            {"hi", s.hi}};
}
AugmentationStep step_from_json(const json& j) {
    return {j.at("chance"), j.at("per_channel_chance"), j.at("lo"), j.at("hi")};
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["data"] = {
        {"dataset_root", cfg.dataset_root},
        {"scene_id", cfg.scene_id},
        {"num_samples", cfg.num_samples},
        {"synth",
         {{"width", cfg.synth.width},
          {"height", cfg.synth.height},
          {"fx", cfg.synth.K.fx},
          {"fy", cfg.synth.K.fy},
          {"cx", cfg.synth.K.cx},
          {"cy", cfg.synth.K.cy},
          {"min_objects", cfg.synth.min_objects},
          {"max_objects", cfg.synth.max_objects},
          {"min_distance_mm", cfg.synth.min_distance_mm},
          {"max_distance_mm", cfg.synth.max_distance_mm},
          {"min_elevation_rad", cfg.synth.min_elevation_rad},
          {"max_elevation_rad", cfg.synth.max_elevation_rad},
          {"with_depth", cfg.synth.with_depth},
          {"max_retries", cfg.synth.max_retries}}},
    };
    for (const auto& o : cfg.objects)
        j["data"]["objects"].push_back({{"class_id", o.class_id},
                                        {"extents", {o.ex, o.ey, o.ez}},
                                        {"symmetric", o.symmetric}});

    j["model"] = {
        {"backbone",
         {{"stage_widths", cfg.model.backbone.stage_widths},
          {"stem_width", cfg.model.backbone.stem_width},
          {"convs_per_stage", cfg.model.backbone.convs_per_stage}}},
        {"pyramid",
         {{"width", cfg.model.pyramid.width}, {"aggregation", to_string(cfg.model.pyramid.mode)}}},
        {"heads",
         {{"location_width", cfg.model.heads.location_width},
          {"correspondence_width", cfg.model.heads.correspondence_width},
          {"num_classes", cfg.model.heads.num_classes},
          {"anchors_per_location", cfg.model.heads.anchors_per_location},
          {"l2_lambda", cfg.model.heads.l2_lambda},
          {"location_prior", cfg.model.heads.location_prior}}},
    };

    j["anchors"] = {{"base_sizes", cfg.anchor_spec.base_sizes},
                    {"scales", cfg.anchor_spec.scales},
                    {"ratios", cfg.anchor_spec.ratios}};

    j["loss"] = {
        {"weights",
         {{"correspondence", cfg.loss_weights.correspondence},
          {"location", cfg.loss_weights.location},
          {"mask", cfg.loss_weights.mask}}},
        {"focal", {{"alpha", cfg.focal.alpha}, {"gamma", cfg.focal.gamma}}},
        {"correspondence",
         {{"delta", cfg.corr_loss.delta}, {"edge_weight", cfg.corr_loss.edge_weight}}},
    };

    j["augmentation"] = {
        {"enabled", cfg.augment_enabled},
        {"gaussian_blur", step_to_json(cfg.augment.gaussian_blur)},
        {"mixed_blur", step_to_json(cfg.augment.mixed_blur)},
        {"bilateral_blur", step_to_json(cfg.augment.bilateral_blur)},
        {"hue_saturation", step_to_json(cfg.augment.hue_saturation)},
        {"grayscale", step_to_json(cfg.augment.grayscale)},
        {"add", step_to_json(cfg.augment.add)},
        {"multiply", step_to_json(cfg.augment.multiply)},
        {"gamma_contrast", step_to_json(cfg.augment.gamma_contrast)},
        {"sigmoid_contrast", step_to_json(cfg.augment.sigmoid_contrast)},
        {"log_contrast", step_to_json(cfg.augment.log_contrast)},
        {"linear_contrast", step_to_json(cfg.augment.linear_contrast)},
    };

    j["optimizer"] = {{"lr", cfg.optimizer.lr},
                      {"batch_size", cfg.optimizer.batch_size},
                      {"epochs", cfg.optimizer.epochs},
                      {"plateau_factor", cfg.optimizer.plateau_factor},
                      {"plateau_patience", cfg.optimizer.plateau_patience},
                      {"max_steps", cfg.optimizer.max_steps}};
    j["freeze_backbone"] = cfg.freeze_backbone;
    j["resume"] = cfg.resume;

    j["pose"] = {
        {"ransac",
         {{"iterations", cfg.ransac.iterations},
          {"sample_size", cfg.ransac.sample_size},
          {"inlier_px", cfg.ransac.inlier_px},
          {"seed", cfg.ransac.seed}}},
        {"icp",
         {{"max_iters", cfg.icp.max_iters},
          {"tol", cfg.icp.tol},
          {"trim_fraction", cfg.icp.trim_fraction}}},
        {"use_icp", cfg.use_icp},
    };

    j["eval"] = {{"threshold_fraction", cfg.eval.threshold_fraction},
                 {"score_threshold", cfg.eval.score_threshold},
                 {"symmetric_classes",
                  std::vector<int>(cfg.eval.symmetric_classes.begin(),
                                   cfg.eval.symmetric_classes.end())}};

    j["seed"] = cfg.seed;
    j["checkpoint_path"] = cfg.checkpoint_path;
    return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
    const json j = json::parse(text);
    RunConfig cfg;

    const json& d = j.at("data");
    cfg.dataset_root = d.at("dataset_root").get<std::string>();
    cfg.scene_id = d.at("scene_id");
    cfg.num_samples = d.at("num_samples");
    const json& sy = d.at("synth");
    cfg.synth.width = sy.at("width");
    cfg.synth.height = sy.at("height");
    cfg.synth.K = {sy.at("fx"), sy.at("fy"), sy.at("cx"), sy.at("cy")};
    cfg.synth.min_objects = sy.at("min_objects");
    cfg.synth.max_objects = sy.at("max_objects");
    cfg.synth.min_distance_mm = sy.at("min_distance_mm");
    cfg.synth.max_distance_mm = sy.at("max_distance_mm");
    cfg.synth.min_elevation_rad = sy.at("min_elevation_rad");
    cfg.synth.max_elevation_rad = sy.at("max_elevation_rad");
    cfg.synth.with_depth = sy.at("with_depth");
    cfg.synth.max_retries = sy.at("max_retries");
    cfg.objects.clear();
    if (d.contains("objects"))
        for (const auto& o : d.at("objects"))
            cfg.objects.push_back({o.at("class_id"), o.at("extents").at(0), o.at("extents").at(1),
                                   o.at("extents").at(2), o.at("symmetric")});

    const json& m = j.at("model");
    cfg.model.backbone.stage_widths = m.at("backbone").at("stage_widths").get<std::vector<int>>();
    cfg.model.backbone.stem_width = m.at("backbone").at("stem_width");
    cfg.model.backbone.convs_per_stage = m.at("backbone").at("convs_per_stage");
    cfg.model.pyramid.width = m.at("pyramid").at("width");
    cfg.model.pyramid.mode = aggregation_from_string(m.at("pyramid").at("aggregation"));
    const json& hd = m.at("heads");
    cfg.model.heads.location_width = hd.at("location_width");
    cfg.model.heads.correspondence_width = hd.at("correspondence_width");
    cfg.model.heads.num_classes = hd.at("num_classes");
    cfg.model.heads.anchors_per_location = hd.at("anchors_per_location");
    cfg.model.heads.l2_lambda = hd.at("l2_lambda");
    cfg.model.heads.location_prior = hd.at("location_prior");

    const json& an = j.at("anchors");
    for (int i = 0; i < 3; ++i) cfg.anchor_spec.base_sizes[i] = an.at("base_sizes").at(i);
    cfg.anchor_spec.scales = an.at("scales").get<std::vector<double>>();
    cfg.anchor_spec.ratios = an.at("ratios").get<std::vector<double>>();

    const json& ls = j.at("loss");
    cfg.loss_weights.correspondence = ls.at("weights").at("correspondence");
    cfg.loss_weights.location = ls.at("weights").at("location");
    cfg.loss_weights.mask = ls.at("weights").at("mask");
    cfg.focal.alpha = ls.at("focal").at("alpha");
    cfg.focal.gamma = ls.at("focal").at("gamma");
    cfg.corr_loss.delta = ls.at("correspondence").at("delta");
    cfg.corr_loss.edge_weight = ls.at("correspondence").at("edge_weight");

    const json& au = j.at("augmentation");
    cfg.augment_enabled = au.at("enabled");
    cfg.augment.gaussian_blur = step_from_json(au.at("gaussian_blur"));
    cfg.augment.mixed_blur = step_from_json(au.at("mixed_blur"));
    cfg.augment.bilateral_blur = step_from_json(au.at("bilateral_blur"));
    cfg.augment.hue_saturation = step_from_json(au.at("hue_saturation"));
    cfg.augment.grayscale = step_from_json(au.at("grayscale"));
    cfg.augment.add = step_from_json(au.at("add"));
    cfg.augment.multiply = step_from_json(au.at("multiply"));
    cfg.augment.gamma_contrast = step_from_json(au.at("gamma_contrast"));
    cfg.augment.sigmoid_contrast = step_from_json(au.at("sigmoid_contrast"));
    cfg.augment.log_contrast = step_from_json(au.at("log_contrast"));
    cfg.augment.linear_contrast = step_from_json(au.at("linear_contrast"));

    const json& op = j.at("optimizer");
    cfg.optimizer.lr = op.at("lr");
    cfg.optimizer.batch_size = op.at("batch_size");
    cfg.optimizer.epochs = op.at("epochs");
    cfg.optimizer.plateau_factor = op.at("plateau_factor");
    cfg.optimizer.plateau_patience = op.at("plateau_patience");
    cfg.optimizer.max_steps = op.at("max_steps");
    cfg.freeze_backbone = j.at("freeze_backbone");
    cfg.resume = j.value("resume", false);

    const json& ps = j.at("pose");
    cfg.ransac.iterations = ps.at("ransac").at("iterations");
    cfg.ransac.sample_size = ps.at("ransac").at("sample_size");
    cfg.ransac.inlier_px = ps.at("ransac").at("inlier_px");
    cfg.ransac.seed = ps.at("ransac").at("seed");
    cfg.icp.max_iters = ps.at("icp").at("max_iters");
    cfg.icp.tol = ps.at("icp").at("tol");
    cfg.icp.trim_fraction = ps.at("icp").at("trim_fraction");
    cfg.use_icp = ps.at("use_icp");

    const json& ev = j.at("eval");
    cfg.eval.threshold_fraction = ev.at("threshold_fraction");
    cfg.eval.score_threshold = ev.at("score_threshold");
    cfg.eval.symmetric_classes.clear();
    for (int c : ev.at("symmetric_classes")) cfg.eval.symmetric_classes.insert(c);

    cfg.seed = j.at("seed");
    cfg.checkpoint_path = j.at("checkpoint_path").get<std::string>();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    try {
        return run_config_from_json(os.str());
    } catch (const std::exception& e) {
        throw std::runtime_error("invalid config " + path + ": " + e.what());
    }
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write config: " + path);
    f << run_config_to_json(cfg) << "\n";
}

}  // namespace poselab
