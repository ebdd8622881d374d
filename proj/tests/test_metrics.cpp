#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "poselab/metrics.hpp"

using namespace poselab;

namespace {

Pose random_pose(std::mt19937_64& rng, double tmax = 20.0) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Pose p;
    p.R = Eigen::AngleAxisd(uni(rng) * M_PI,
                            Eigen::Vector3d(uni(rng), uni(rng), uni(rng)).normalized())
              .toRotationMatrix();
    p.t = {uni(rng) * tmax, uni(rng) * tmax, uni(rng) * tmax};
    return p;
}

PointCloud random_cloud(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> uni(-50.0, 50.0);
    PointCloud pts;
    for (int i = 0; i < n; ++i) pts.push_back({uni(rng), uni(rng), uni(rng)});
    return pts;
}

double add_oracle(const PointCloud& pts, const Pose& est, const Pose& gt) {
    double s = 0;
    for (const auto& p : pts) s += (est.apply(p) - gt.apply(p)).norm();
    return s / double(pts.size());
}

double adds_oracle(const PointCloud& pts, const Pose& est, const Pose& gt) {
    double s = 0;
    for (const auto& p : pts) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : pts) best = std::min(best, (gt.apply(p) - est.apply(q)).norm());
        s += best;
    }
    return s / double(pts.size());
}

}  // namespace

TEST_CASE("add_score examples") {
    std::mt19937_64 rng(1);
    const auto pts = random_cloud(rng, 50);
    const Pose gt = random_pose(rng);
    CHECK(add_score(pts, gt, gt) == doctest::Approx(0.0));
    Pose shifted = gt;
    shifted.t += Eigen::Vector3d(3, 4, 0);
    CHECK(add_score(pts, shifted, gt) == doctest::Approx(5.0));
}

TEST_CASE("add/adds match brute-force oracles; adds <= add") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto pts = random_cloud(rng, 30);
        const Pose a = random_pose(rng), b = random_pose(rng);
        const double addv = add_score(pts, a, b);
        const double addsv = adds_score(pts, a, b);
        CHECK(addv == doctest::Approx(add_oracle(pts, a, b)).epsilon(1e-12));
        CHECK(addsv == doctest::Approx(adds_oracle(pts, a, b)).epsilon(1e-12));
        CHECK(addsv <= addv + 1e-12);
    }
}

TEST_CASE("square rotated about its symmetry axis: adds near zero, add positive") {
    PointCloud square = {{10, 10, 0}, {-10, 10, 0}, {-10, -10, 0}, {10, -10, 0}};
    Pose gt;
    gt.t = {0, 0, 500};
    Pose est = gt;
    est.R = Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    CHECK(adds_score(square, est, gt) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(add_score(square, est, gt) > 1.0);
}

TEST_CASE("scores are invariant under a common rigid transform") {
    std::mt19937_64 rng(3);
    const auto pts = random_cloud(rng, 20);
    const Pose a = random_pose(rng), b = random_pose(rng), g = random_pose(rng);
    auto compose = [](const Pose& x, const Pose& y) {
        Pose out;
        out.R = x.R * y.R;
        out.t = x.R * y.t + x.t;
        return out;
    };
    CHECK(add_score(pts, a, b) ==
          doctest::Approx(add_score(pts, compose(g, a), compose(g, b))).epsilon(1e-9));
    CHECK(adds_score(pts, a, b) ==
          doctest::Approx(adds_score(pts, compose(g, a), compose(g, b))).epsilon(1e-9));
}

TEST_CASE("model diameter") {
    PointCloud cube;
    for (int k = 0; k < 8; ++k)
        cube.push_back({double(k & 1), double((k >> 1) & 1), double((k >> 2) & 1)});
    CHECK(model_diameter(cube) == doctest::Approx(std::sqrt(3.0)));
    CHECK(model_diameter(PointCloud{{1, 2, 3}}) == 0.0);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = random_cloud(rng, 40);
        double best = 0;
        for (const auto& p : pts)
            for (const auto& q : pts) best = std::max(best, (p - q).norm());
        CHECK(model_diameter(pts) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("subsample_points is deterministic and bounded") {
    std::mt19937_64 rng(5);
    const auto pts = random_cloud(rng, 5000);
    const auto a = subsample_points(pts);
    const auto b = subsample_points(pts);
    CHECK(a.size() <= 2000);
    CHECK(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("evaluate: recall semantics") {
    std::mt19937_64 rng(6);
    const auto pts = random_cloud(rng, 30);
    std::map<int, ScoringModel> models;
    models[1] = {pts, model_diameter(pts)};
    models[2] = {pts, model_diameter(pts)};

    std::vector<GroundTruthPose> gts;
    for (int img = 0; img < 4; ++img) {
        gts.push_back({img, 1, random_pose(rng)});
        gts.push_back({img, 2, random_pose(rng)});
    }

    SUBCASE("all exact poses give recall 1.0") {
        std::vector<Detection> dets;
        for (const auto& g : gts) dets.push_back({g.image_id, g.class_id, 0.9, g.pose});
        const auto rep = evaluate(dets, gts, models);
        CHECK(rep.mean_recall == doctest::Approx(1.0));
    }

    SUBCASE("no detections give recall 0.0 with all records incorrect") {
        const auto rep = evaluate({}, gts, models);
        CHECK(rep.mean_recall == doctest::Approx(0.0));
        CHECK(rep.records.size() == gts.size());
        for (const auto& r : rep.records) CHECK_FALSE(r.correct);
    }

    SUBCASE("constructed half-correct set scores 0.5") {
        std::vector<Detection> dets;
        for (const auto& g : gts) {
            Pose p = g.pose;
            if (g.class_id == 2) p.t += Eigen::Vector3d(1000, 0, 0);  // far off
            dets.push_back({g.image_id, g.class_id, 0.9, p});
        }
        const auto rep = evaluate(dets, gts, models);
        CHECK(rep.mean_recall == doctest::Approx(0.5));
    }

    SUBCASE("highest-score detection is the one scored") {
        std::vector<GroundTruthPose> one = {gts[0]};
        Pose bad = one[0].pose;
        bad.t += Eigen::Vector3d(500, 0, 0);
        std::vector<Detection> dets = {{one[0].image_id, 1, 0.95, bad},
                                       {one[0].image_id, 1, 0.6, one[0].pose}};
        const auto rep = evaluate(dets, one, models);
        CHECK(rep.mean_recall == doctest::Approx(0.0));  // the 0.95 (wrong) one counts
        std::swap(dets[0].score, dets[1].score);
        CHECK(evaluate(dets, one, models).mean_recall == doctest::Approx(1.0));
    }

    SUBCASE("evaluate is permutation-invariant over detections") {
        std::vector<Detection> dets;
        for (const auto& g : gts) dets.push_back({g.image_id, g.class_id, 0.9, g.pose});
        auto rev = dets;
        std::reverse(rev.begin(), rev.end());
        CHECK(evaluate(dets, gts, models).mean_recall ==
              evaluate(rev, gts, models).mean_recall);
    }

    SUBCASE("threshold is exactly 0.10 of the diameter") {
        std::vector<GroundTruthPose> one = {gts[0]};
        const double d = models.at(1).diameter;
        Pose just_in = one[0].pose;
        just_in.t += Eigen::Vector3d(0.0999 * d, 0, 0);
        Pose just_out = one[0].pose;
        just_out.t += Eigen::Vector3d(0.1001 * d, 0, 0);
        CHECK(evaluate({{one[0].image_id, 1, 0.9, just_in}}, one, models).mean_recall ==
              doctest::Approx(1.0));
        CHECK(evaluate({{one[0].image_id, 1, 0.9, just_out}}, one, models).mean_recall ==
              doctest::Approx(0.0));
    }

    SUBCASE("symmetric classes are scored with adds") {
        PointCloud square = {{10, 10, 0}, {-10, 10, 0}, {-10, -10, 0}, {10, -10, 0}};
        std::map<int, ScoringModel> sm;
        sm[7] = {square, model_diameter(square)};
        std::vector<GroundTruthPose> one = {{0, 7, Pose{}}};
        one[0].pose.t = {0, 0, 500};
        Pose rot = one[0].pose;
        rot.R = Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        EvalConfig cfg;
        const auto plain = evaluate({{0, 7, 0.9, rot}}, one, sm, cfg);
        CHECK(plain.mean_recall == doctest::Approx(0.0));  // ADD fails
        cfg.symmetric_classes.insert(7);
        const auto sym = evaluate({{0, 7, 0.9, rot}}, one, sm, cfg);
        CHECK(sym.mean_recall == doctest::Approx(1.0));  // ADDS passes
    }

    SUBCASE("detections below the score threshold are ignored") {
        std::vector<GroundTruthPose> one = {gts[0]};
        std::vector<Detection> dets = {{one[0].image_id, 1, 0.4, one[0].pose}};
        CHECK(evaluate(dets, one, models).mean_recall == doctest::Approx(0.0));
    }
}

TEST_CASE("report formatting and serialization") {
    std::mt19937_64 rng(7);
    const auto pts = random_cloud(rng, 20);
    std::map<int, ScoringModel> models;
    models[1] = {pts, model_diameter(pts)};
    std::vector<GroundTruthPose> gts = {{0, 1, random_pose(rng)}};
    std::vector<Detection> dets = {{0, 1, 0.9, gts[0].pose}};
    const auto rep = evaluate(dets, gts, models);

    const std::string text = format_report(rep);
    CHECK(text.find("Avg.") != std::string::npos);
    CHECK(rep.mean_recall == doctest::Approx(1.0));

    const std::string path = "test_metrics_report.json";
    write_report(path, rep);
    std::ifstream f(path);
    REQUIRE(f.good());
    std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(content.find("mean_recall") != std::string::npos);
    std::remove(path.c_str());
}
