#include "poselab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace poselab {

double add_score(std::span<const Eigen::Vector3d> points, const Pose& est, const Pose& gt) {
    double sum = 0;
    for (const auto& p : points) sum += (est.apply(p) - gt.apply(p)).norm();
    return sum / double(points.size());
}

double adds_score(std::span<const Eigen::Vector3d> points, const Pose& est, const Pose& gt) {
    std::vector<Eigen::Vector3d> est_pts;
    est_pts.reserve(points.size());
    for (const auto& p : points) est_pts.push_back(est.apply(p));
    double sum = 0;
    for (const auto& p : points) {
        const Eigen::Vector3d q = gt.apply(p);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : est_pts) best = std::min(best, (e - q).squaredNorm());
        sum += std::sqrt(best);
    }
    return sum / double(points.size());
}

double model_diameter(std::span<const Eigen::Vector3d> points) {
    double best = 0;
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            best = std::max(best, (points[i] - points[j]).squaredNorm());
    return std::sqrt(best);
}

PointCloud subsample_points(std::span<const Eigen::Vector3d> points, std::size_t max_points) {
    if (points.size() <= max_points) return {points.begin(), points.end()};
    PointCloud out;
    out.reserve(max_points);
    const double step = double(points.size()) / double(max_points);
    for (std::size_t i = 0; i < max_points; ++i) out.push_back(points[std::size_t(i * step)]);
    return out;
}

EvalReport evaluate(const std::vector<Detection>& detections,
                    const std::vector<GroundTruthPose>& ground_truth,
                    const std::map<int, ScoringModel>& models, const EvalConfig& cfg) {
    EvalReport report;
    std::map<int, std::pair<int, int>> tally;  // class -> (correct, total)

    for (const auto& gt : ground_truth) {
        const auto mit = models.find(gt.class_id);
        if (mit == models.end())
            throw std::invalid_argument("evaluate: no model for class " +
                                        std::to_string(gt.class_id));
        const ScoringModel& model = mit->second;

        const Detection* best = nullptr;
        for (const auto& d : detections) {
            if (d.image_id != gt.image_id || d.class_id != gt.class_id) continue;
            if (d.score < cfg.score_threshold) continue;
            if (!best || d.score > best->score) best = &d;
        }

        EvalReport::Record rec;
        rec.image_id = gt.image_id;
        rec.class_id = gt.class_id;
        if (best) {
            const bool symmetric = cfg.symmetric_classes.count(gt.class_id) > 0;
            rec.distance = symmetric ? adds_score(model.points, best->pose, gt.pose)
                                     : add_score(model.points, best->pose, gt.pose);
            rec.score = best->score;
            rec.correct = rec.distance < cfg.threshold_fraction * model.diameter;
        } else {
            rec.score = -1;
            rec.distance = std::numeric_limits<double>::infinity();
        }
        report.records.push_back(rec);
        auto& [correct, total] = tally[gt.class_id];
        ++total;
        if (rec.correct) ++correct;
    }

    double sum = 0;
    for (const auto& [cls, ct] : tally) {
        EvalReport::ClassRow row;
        row.class_id = cls;
        row.correct = ct.first;
        row.total = ct.second;
        row.recall = ct.second > 0 ? double(ct.first) / ct.second : 0.0;
        sum += row.recall;
        report.per_class.push_back(row);
    }
    report.mean_recall = tally.empty() ? 0.0 : sum / double(tally.size());
    return report;
}

std::string format_report(const EvalReport& report) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1);
    os << "class      recall\n";
    for (const auto& row : report.per_class)
        os << std::setw(5) << row.class_id << "  " << std::setw(9) << 100.0 * row.recall << "  ("
           << row.correct << "/" << row.total << ")\n";
    os << " Avg.  " << std::setw(9) << 100.0 * report.mean_recall << "\n";
    return os.str();
}

void write_report(const std::string& path, const EvalReport& report) {
    nlohmann::json j;
    j["mean_recall"] = report.mean_recall;
    for (const auto& row : report.per_class)
        j["per_class"].push_back({{"class_id", row.class_id},
                                  {"correct", row.correct},
                                  {"total", row.total},
                                  {"recall", row.recall}});
    for (const auto& rec : report.records)
        j["records"].push_back({{"image_id", rec.image_id},
                                {"class_id", rec.class_id},
                                {"score", rec.score},
                                {"distance_mm", std::isfinite(rec.distance) ? rec.distance : -1.0},
                                {"correct", rec.correct}});
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write report: " + path);
    f << j.dump(2) << "\n";
}

}  // namespace poselab
