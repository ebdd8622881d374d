#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "poselab/geometry.hpp"

namespace poselab {

struct EvalConfig {
    double threshold_fraction = 0.10;  // of model diameter
    std::set<int> symmetric_classes;
    double score_threshold = 0.5;
};

/// Mean distance between model points under the two poses.
double add_score(std::span<const Eigen::Vector3d> points, const Pose& est, const Pose& gt);

/// Symmetric variant: mean distance from each gt-transformed point to
/// its nearest est-transformed point.
double adds_score(std::span<const Eigen::Vector3d> points, const Pose& est, const Pose& gt);

/// Exact maximum pairwise distance.
double model_diameter(std::span<const Eigen::Vector3d> points);

/// Deterministic stride subsampling to at most max_points.
PointCloud subsample_points(std::span<const Eigen::Vector3d> points, std::size_t max_points = 2000);

struct ScoringModel {
    PointCloud points;  // already subsampled
    double diameter = 0;
};

struct Detection {
    int image_id = 0;
    int class_id = 0;
    double score = 0;
    Pose pose;
};

struct GroundTruthPose {
    int image_id = 0;
    int class_id = 0;
    Pose pose;
};

struct EvalReport {
    struct ClassRow {
        int class_id = 0;
        int total = 0;
        int correct = 0;
        double recall = 0;
    };
    struct Record {
        int image_id = 0;
        int class_id = 0;
        double score = 0;       // -1 when no detection matched
        double distance = 0;    // ADD or ADDS, mm
        bool correct = false;
    };
    std::vector<ClassRow> per_class;
    double mean_recall = 0;  // unweighted class average
    std::vector<Record> records;
};

/// Per ground-truth object the highest-score detection of its class in
/// the same image is scored; correct iff ADD (ADDS for symmetric
/// classes) < threshold_fraction * diameter. Missing detections count
/// as incorrect.
EvalReport evaluate(const std::vector<Detection>& detections,
                    const std::vector<GroundTruthPose>& ground_truth,
                    const std::map<int, ScoringModel>& models, const EvalConfig& cfg = {});

/// Per-class table, one row per class plus the average row.
std::string format_report(const EvalReport& report);

/// Machine-readable summary (JSON).
void write_report(const std::string& path, const EvalReport& report);

}  // namespace poselab
