#pragma once

#include <string>
#include <vector>

#include "poselab/anchors.hpp"
#include "poselab/augment.hpp"
#include "poselab/losses.hpp"
#include "poselab/metrics.hpp"
#include "poselab/model.hpp"
#include "poselab/synth.hpp"

namespace poselab {

struct OptimizerConfig {
    double lr = 1e-5;
    int batch_size = 8;
    int epochs = 200;
    double plateau_factor = 0.1;  // lr multiplier on plateau
    int plateau_patience = 2;     // epochs without improvement
    int max_steps = 0;            // 0 = unlimited, else hard cap on optimizer steps
};

/// One generator object: an axis-aligned cuboid of the given extents.
struct ObjectSpec {
    int class_id = 1;
    double ex = 100, ey = 60, ez = 40;  // mm
    bool symmetric = false;
};

struct RunConfig {
    // data: BOP directory when dataset_root is set, generator otherwise
    std::string dataset_root;
    int scene_id = 0;
    SynthConfig synth;
    int num_samples = 32;
    std::vector<ObjectSpec> objects = {{1, 100, 60, 40, false}, {2, 80, 80, 50, false}};

    ModelConfig model;
    AnchorSpec anchor_spec;
    LossWeights loss_weights;
    FocalConfig focal;
    CorrLossConfig corr_loss;
    AugmentationConfig augment;
    bool augment_enabled = true;

    OptimizerConfig optimizer;
    bool freeze_backbone = false;
    bool resume = false;  ///< warm-start training from checkpoint_path

    RansacConfig ransac;
    IcpConfig icp;
    bool use_icp = false;
    EvalConfig eval;

    std::uint64_t seed = 0;
    std::string checkpoint_path = "model.ckpt";
};

/// JSON config file; round-trips losslessly.
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);
std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

}  // namespace poselab
