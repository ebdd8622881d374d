#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "poselab/bop.hpp"
#include "poselab/config.hpp"
#include "poselab/losses.hpp"
#include "poselab/metrics.hpp"
#include "poselab/model.hpp"

namespace poselab {

/// Generator meshes from the config's object list.
std::vector<MeshModel> build_meshes(const RunConfig& cfg);

/// Ingests the configured BOP scene or generates synthetic samples.
std::vector<SceneSample> load_samples(const RunConfig& cfg, const std::vector<MeshModel>& meshes);

/// Sorted class ids; index in this list is the network class index.
std::vector<int> class_id_table(const std::vector<MeshModel>& meshes);

/// Anchor assignment and stride-8 mask grid for one sample.
ImageTargets make_targets(const SceneSample& sample, const std::vector<Anchor>& anchors,
                          const std::vector<int>& class_ids);

/// Batch of samples to an N x 3 x H x W tensor.
TensorPtr<float> batch_to_tensor(const std::vector<const SceneSample*>& batch);

struct TrainStats {
    int steps = 0;
    int epochs = 0;
    double final_loss = 0;
    std::vector<double> epoch_losses;
};

/// Full training loop: epoch shuffling, augmentation, Adam updates,
/// learning-rate decay on plateau, checkpointing. Emits one structured
/// loss line per epoch.
TrainStats train(const RunConfig& cfg, std::ostream& log);

struct DetectionRecord {
    int image_id = 0;
    int class_id = 0;
    double score = 0;
    Corners2D corners;  // decoded corners of the best-scoring anchor
    Pose pose;
    std::optional<Pose> refined;
    double time_ms = 0;
};

/// Forward pass, score thresholding, correspondence pooling, RANSAC-PnP
/// and optional ICP refinement for every sample.
std::vector<DetectionRecord> infer_samples(const Model<float>& model,
                                           const std::vector<SceneSample>& samples,
                                           const std::vector<MeshModel>& meshes,
                                           const RunConfig& cfg);

struct EvalOutput {
    EvalReport report;
    std::vector<ResultRow> rows;
};

EvalOutput evaluate_detections(const std::vector<DetectionRecord>& detections,
                               const std::vector<SceneSample>& samples,
                               const std::vector<MeshModel>& meshes, const RunConfig& cfg);

/// Gradient checks, oracle equivalences, and geometry roundtrips; one
/// line per check. inject_failure deliberately breaks one check (test
/// hook).
bool selftest(std::ostream& log, bool inject_failure = false);

}  // namespace poselab
