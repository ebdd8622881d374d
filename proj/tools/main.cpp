#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "poselab/pipeline.hpp"

namespace {

poselab::RunConfig resolve_config(const std::string& config_path, const std::string& checkpoint,
                                  std::int64_t seed, const std::string& aggregation,
                                  const std::string& icp) {
    poselab::RunConfig cfg;
    if (!config_path.empty()) cfg = poselab::load_run_config(config_path);
    if (!checkpoint.empty()) cfg.checkpoint_path = checkpoint;
    if (seed >= 0) {
        cfg.seed = std::uint64_t(seed);
        cfg.ransac.seed = std::uint64_t(seed);
    }
    if (!aggregation.empty()) cfg.model.pyramid.mode = poselab::aggregation_from_string(aggregation);
    if (icp == "on") cfg.use_icp = true;
    if (icp == "off") cfg.use_icp = false;
    return cfg;
}

poselab::Model<float> load_model(const poselab::RunConfig& cfg,
                                 const std::vector<poselab::MeshModel>& meshes) {
    poselab::ModelConfig mc = cfg.model;
    mc.heads.num_classes = int(poselab::class_id_table(meshes).size());
    mc.heads.anchors_per_location = cfg.anchor_spec.anchors_per_location();
    poselab::Model<float> model(mc, cfg.seed);
    model.load(cfg.checkpoint_path);
    return model;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-shot multi-object 6D pose estimation"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    std::string config_path, checkpoint, out_path, aggregation, icp;
    std::int64_t seed = -1;
    app.add_option("--config", config_path, "JSON run configuration")->capture_default_str();
    app.add_option("--checkpoint", checkpoint, "Checkpoint path override");
    app.add_option("--seed", seed, "Seed override (also reseeds RANSAC)");
    app.add_option("--out", out_path, "Output path");
    app.add_option("--icp", icp, "Depth-based refinement: on|off")
        ->check(CLI::IsMember({"", "on", "off"}));
    app.add_option("--aggregation", aggregation, "Feature aggregation: pfpn|fpn|none")
        ->check(CLI::IsMember({"", "pfpn", "fpn", "none"}));

    auto* cmd_train = app.add_subcommand("train", "Train a model and save a checkpoint");
    auto* cmd_infer = app.add_subcommand("infer", "Run detection and write a result CSV");
    auto* cmd_eval = app.add_subcommand("eval", "Run detection and report ADD(-S) recall");
    auto* cmd_selftest = app.add_subcommand("selftest", "Run built-in consistency checks");
    auto* cmd_config = app.add_subcommand("init-config", "Write the default configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = resolve_config(config_path, checkpoint, seed, aggregation, icp);

        if (cmd_config->parsed()) {
            if (out_path.empty()) {
                std::cout << poselab::run_config_to_json(cfg) << "\n";
            } else {
                poselab::save_run_config(out_path, cfg);
                std::cout << "wrote " << out_path << "\n";
            }
            return 0;
        }
        if (cmd_selftest->parsed()) {
            return poselab::selftest(std::cout) ? 0 : 1;
        }
        if (cmd_train->parsed()) {
            const auto stats = poselab::train(cfg, std::cout);
            std::cout << "trained " << stats.steps << " steps over " << stats.epochs
                      << " epochs, final loss " << stats.final_loss << ", checkpoint "
                      << cfg.checkpoint_path << "\n";
            return 0;
        }

        const auto meshes = poselab::build_meshes(cfg);
        const auto samples = poselab::load_samples(cfg, meshes);
        const auto model = load_model(cfg, meshes);
        const auto detections = poselab::infer_samples(model, samples, meshes, cfg);
        const auto result = poselab::evaluate_detections(detections, samples, meshes, cfg);

        if (cmd_infer->parsed()) {
            const std::string path = out_path.empty() ? "results.csv" : out_path;
            poselab::write_result_file(path, result.rows);
            std::cout << detections.size() << " detections over " << samples.size()
                      << " images, wrote " << path << "\n";
            return 0;
        }
        // eval
        std::cout << poselab::format_report(result.report);
        if (!out_path.empty()) {
            poselab::write_report(out_path, result.report);
            std::cout << "wrote " << out_path << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
