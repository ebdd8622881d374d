#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "poselab/gradcheck.hpp"
#include "poselab/losses.hpp"
#include "poselab/model.hpp"

using namespace poselab;

namespace {

/// Independent scalar re-implementation of the per-anchor correspondence
/// loss (point term + edge term), written directly from the formula.
double corr_loss_oracle(const std::array<double, 16>& pred, const std::array<double, 16>& tgt,
                        const Anchor& anc, const CorrLossConfig& cfg) {
    auto huber = [&](double r) {
        const double a = std::abs(r);
        return a < cfg.delta ? 0.5 * r * r / cfg.delta : a - 0.5 * cfg.delta;
    };
    double point = 0;
    for (int c = 0; c < 16; ++c) point += huber(pred[c] - tgt[c]);
    point /= 16.0;

    auto px = [&](const std::array<double, 16>& v, int k) {
        return std::array<double, 2>{anc.box.x1 + v[2 * k] * anc.box.width(),
                                     anc.box.y1 + v[2 * k + 1] * anc.box.height()};
    };
    double edge = 0;
    for (const auto& e : kBox3DEdges) {
        const auto pa = px(pred, e[0]), pb = px(pred, e[1]);
        const auto ga = px(tgt, e[0]), gb = px(tgt, e[1]);
        const double lp = std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
        const double lg = std::hypot(ga[0] - gb[0], ga[1] - gb[1]);
        const double sa = 0.5 * (anc.box.width() + anc.box.height());
        edge += huber((lp - lg) / sa);
    }
    edge /= 12.0;
    return point + cfg.edge_weight * edge;
}

/// One-positive-anchor fixture on the smallest grid worth having.
struct CorrFixture {
    std::vector<Anchor> anchors;
    std::vector<TensorPtr<float>> levels;
    std::vector<ImageTargets> targets;
    int A = 1;

    explicit CorrFixture(const std::array<double, 16>& pred, const std::array<double, 16>& tgt) {
        AnchorSpec spec;
        spec.scales = {1.0};
        spec.ratios = {1.0};
        anchors = generate_anchors(32, 32, spec);  // 4x4 + 2x2 + 1x1 = 21
        levels = {Tensor<float>::create({1, 16, 4, 4}), Tensor<float>::create({1, 16, 2, 2}),
                  Tensor<float>::create({1, 16, 1, 1})};
        ImageTargets t;
        t.assignment.labels.assign(anchors.size(), -1);
        t.assignment.gt_index.assign(anchors.size(), -1);
        t.assignment.targets.resize(anchors.size());
        t.assignment.labels[5] = 0;  // one positive on P3
        t.assignment.gt_index[5] = 0;
        t.assignment.targets[5] = tgt;
        t.assignment.num_positive = 1;
        targets = {t};
        // write pred into anchor 5 = P3 grid cell (1,1)
        for (int c = 0; c < 16; ++c) levels[0]->at(0, c, 1, 1) = float(pred[c]);
    }
};

}  // namespace

TEST_CASE("focal term formula values") {
    FocalConfig cfg;
    SUBCASE("confident correct prediction is near zero") {
        CHECK(loss_detail::focal_term(1.0 - 1e-7, 1, cfg) == doctest::Approx(0.0).epsilon(1e-5));
    }
    SUBCASE("p=0.5, y=1 evaluates the closed form") {
        CHECK(loss_detail::focal_term(0.5, 1, cfg) ==
              doctest::Approx(0.25 * 0.25 * std::log(2.0)));  // ~0.04332
    }
    SUBCASE("gamma=0, alpha=0.5 is half of plain cross-entropy") {
        FocalConfig plain{0.5, 0.0};
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> uni(0.01, 0.99);
        for (int i = 0; i < 50; ++i) {
            const double p = uni(rng);
            CHECK(loss_detail::focal_term(p, 1, plain) == doctest::Approx(-0.5 * std::log(p)));
            CHECK(loss_detail::focal_term(p, 0, plain) ==
                  doctest::Approx(-0.5 * std::log(1.0 - p)));
        }
    }
    SUBCASE("scores clamp 1e-7 from the boundaries") {
        CHECK(std::isfinite(loss_detail::focal_term(0.0, 1, cfg)));
        CHECK(std::isfinite(loss_detail::focal_term(1.0, 0, cfg)));
    }
}

TEST_CASE("correspondence loss: pred == target gives exactly zero") {
    std::array<double, 16> t{};
    for (int i = 0; i < 16; ++i) t[i] = 0.1 * i - 0.5;
    CorrFixture fx(t, t);
    auto loss = correspondence_loss(fx.levels, fx.targets, fx.anchors, fx.A, {});
    CHECK(loss->values[0] == doctest::Approx(0.0));
}

TEST_CASE("pure corner translation has zero edge term") {
    std::array<double, 16> tgt{};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    for (auto& v : tgt) v = uni(rng);
    std::array<double, 16> pred = tgt;
    for (int k = 0; k < 8; ++k) {
        pred[2 * k] += 0.05;  // same normalized shift for every corner
        pred[2 * k + 1] -= 0.03;
    }
    CorrFixture fx(pred, tgt);
    const CorrLossConfig cfg;
    auto with_edge = correspondence_loss(fx.levels, fx.targets, fx.anchors, fx.A, cfg);
    CorrLossConfig no_edge = cfg;
    no_edge.edge_weight = 0.0;
    auto point_only = correspondence_loss(fx.levels, fx.targets, fx.anchors, fx.A, no_edge);
    CHECK(with_edge->values[0] == doctest::Approx(point_only->values[0]));  // edge term 0
    CHECK(point_only->values[0] > 0.0);
}

TEST_CASE("correspondence loss matches an independent scalar oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::array<double, 16> pred, tgt;
        for (auto& v : pred) v = uni(rng);
        for (auto& v : tgt) v = uni(rng);
        CorrFixture fx(pred, tgt);
        auto loss = correspondence_loss(fx.levels, fx.targets, fx.anchors, fx.A, {});
        CHECK(loss->values[0] ==
              doctest::Approx(corr_loss_oracle(pred, tgt, fx.anchors[5], {})).epsilon(1e-5));
    }
}

TEST_CASE("no positive anchors contribute zero, not an error") {
    std::array<double, 16> z{};
    CorrFixture fx(z, z);
    fx.targets[0].assignment.labels[5] = -1;
    fx.targets[0].assignment.num_positive = 0;
    auto loss = correspondence_loss(fx.levels, fx.targets, fx.anchors, fx.A, {});
    CHECK(loss->values[0] == 0.0);
}

TEST_CASE("total loss breakdown sums to the total") {
    std::mt19937_64 rng(11);
    ModelConfig mc;
    mc.backbone = {{4, 6, 8}, 4, 1};
    mc.pyramid = {8, AggregationMode::PFPN};
    mc.heads.location_width = 8;
    mc.heads.correspondence_width = 8;
    mc.heads.num_classes = 1;
    mc.heads.anchors_per_location = 1;
    Model<float> model(mc, 5);

    AnchorSpec spec;
    spec.scales = {1.0};
    spec.ratios = {1.0};
    const auto anchors = generate_anchors(32, 32, spec);

    auto img = Tensor<float>::create({1, 3, 32, 32});
    std::uniform_real_distribution<float> uni(0.f, 1.f);
    for (auto& v : img->values) v = uni(rng);
    auto out = model.forward(img);

    ImageTargets t;
    t.assignment.labels.assign(anchors.size(), -1);
    t.assignment.gt_index.assign(anchors.size(), -1);
    t.assignment.targets.resize(anchors.size());
    t.assignment.labels[3] = 0;
    t.assignment.targets[3].fill(0.25);
    t.assignment.num_positive = 1;
    t.mask_grid.assign(16, 0);
    t.mask_grid[5] = 1;

    LossWeights w;
    auto [node, b] = total_loss(out, {t}, anchors, 1, 1, w, {}, {},
                                model.heads().l2_regularized_weights(), mc.heads.l2_lambda);
    CHECK(b.total == doctest::Approx(w.correspondence * b.correspondence + w.location * b.location +
                                     w.mask * b.mask + b.l2));
    CHECK(node->values[0] == doctest::Approx(b.total).epsilon(1e-5));
}

TEST_CASE("total loss gradients pass finite differences on the tiny config") {
    // W=8, A=1, K=1, 32x32 image, double precision
    ModelConfig mc;
    mc.backbone = {{4, 6, 8}, 4, 1};
    mc.pyramid = {8, AggregationMode::PFPN};
    mc.heads.location_width = 8;
    mc.heads.correspondence_width = 8;
    mc.heads.num_classes = 1;
    mc.heads.anchors_per_location = 1;
    Model<double> model(mc, 21);

    AnchorSpec spec;
    spec.scales = {1.0};
    spec.ratios = {1.0};
    const auto anchors = generate_anchors(32, 32, spec);

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto img = Tensor<double>::create({1, 3, 32, 32});
    for (auto& v : img->values) v = uni(rng);

    ImageTargets t;
    t.assignment.labels.assign(anchors.size(), -1);
    t.assignment.gt_index.assign(anchors.size(), -1);
    t.assignment.targets.resize(anchors.size());
    t.assignment.labels[6] = 0;
    for (auto& v : t.assignment.targets[6]) v = uni(rng) - 0.5;
    t.assignment.labels[17] = 0;  // one positive on P4 as well
    for (auto& v : t.assignment.targets[17]) v = uni(rng) - 0.5;
    t.assignment.num_positive = 2;
    t.mask_grid.assign(16, 0);
    for (auto& v : t.mask_grid) v = uni(rng) < 0.3 ? 1 : 0;

    auto build = [&] {
        auto out = model.forward(img);
        return total_loss(out, {t}, anchors, 1, 1, {}, {}, {},
                          model.heads().l2_regularized_weights(), mc.heads.l2_lambda)
            .first;
    };
    // small step: the edge term has Huber/norm kinks that a wide central
    // difference can straddle; in double precision 1e-6 is still far
    // above roundoff
    const double err = finite_diff_max_rel_error(model.params().tensors(), build, 1e-6, 3, 99);
    CHECK(err < 1e-4);
}

TEST_CASE("loss is invariant to ground-truth object order") {
    const auto anchors = generate_anchors(64, 64, {});
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<GroundTruthObject> gts;
    for (int g = 0; g < 3; ++g) {
        GroundTruthObject gt;
        gt.class_id = g;
        const double x = uni(rng) * 30, y = uni(rng) * 30;
        gt.box = {x, y, x + 10 + uni(rng) * 20, y + 10 + uni(rng) * 20};
        for (auto& c : gt.corners) c = {uni(rng) * 64, uni(rng) * 64};
        gts.push_back(gt);
    }
    auto rev = gts;
    std::reverse(rev.begin(), rev.end());

    const auto a1 = assign_targets(anchors, gts);
    const auto a2 = assign_targets(anchors, rev);
    CHECK(a1.num_positive == a2.num_positive);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        CHECK(a1.labels[i] == a2.labels[i]);
        if (a1.labels[i] >= 0) CHECK(a1.targets[i] == a2.targets[i]);
    }
}
