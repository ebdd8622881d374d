#include "poselab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "poselab/adam.hpp"
#include "poselab/augment.hpp"
#include "poselab/gradcheck.hpp"

namespace poselab {
namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
    return a;
}

int class_index(const std::vector<int>& ids, int class_id) {
    const auto it = std::lower_bound(ids.begin(), ids.end(), class_id);
    if (it == ids.end() || *it != class_id)
        throw std::runtime_error("unknown class id " + std::to_string(class_id));
    return int(it - ids.begin());
}

}  // namespace

std::vector<MeshModel> build_meshes(const RunConfig& cfg) {
    std::vector<MeshModel> meshes;
    for (const auto& o : cfg.objects)
        meshes.push_back(make_cuboid(o.class_id, {o.ex, o.ey, o.ez}, o.symmetric));
    return meshes;
}

std::vector<SceneSample> load_samples(const RunConfig& cfg, const std::vector<MeshModel>& meshes) {
    if (!cfg.dataset_root.empty()) return load_bop_scene(cfg.dataset_root, cfg.scene_id, meshes);
    return synth_generate(meshes, cfg.num_samples, cfg.synth, cfg.seed);
}

std::vector<int> class_id_table(const std::vector<MeshModel>& meshes) {
    std::vector<int> ids;
    for (const auto& m : meshes) ids.push_back(m.class_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

ImageTargets make_targets(const SceneSample& sample, const std::vector<Anchor>& anchors,
                          const std::vector<int>& class_ids) {
    std::vector<GroundTruthObject> gts;
    for (const auto& obj : sample.objects) {
        GroundTruthObject g;
        g.class_id = class_index(class_ids, obj.class_id);
        g.box = obj.box;
        g.corners = obj.corners;
        gts.push_back(g);
    }
    ImageTargets t;
    t.assignment = assign_targets(anchors, gts);

    const int K = int(class_ids.size());
    const int gh = sample.rgb.height / 8, gw = sample.rgb.width / 8;
    t.mask_grid.assign(std::size_t(K) * gh * gw, 0);
    for (const auto& obj : sample.objects) {
        const int k = class_index(class_ids, obj.class_id);
        for (int i = 0; i < gh; ++i)
            for (int j = 0; j < gw; ++j) {
                bool any = false;
                for (int dy = 0; dy < 8 && !any; ++dy)
                    for (int dx = 0; dx < 8 && !any; ++dx)
                        any = obj.mask[std::size_t(8 * i + dy) * sample.rgb.width + 8 * j + dx];
                if (any) t.mask_grid[(std::size_t(k) * gh + i) * gw + j] = 1;
            }
    }
    return t;
}

TensorPtr<float> batch_to_tensor(const std::vector<const SceneSample*>& batch) {
    const int N = int(batch.size());
    const int H = batch[0]->rgb.height, W = batch[0]->rgb.width;
    auto t = Tensor<float>::create({N, 3, H, W});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) t->at(n, c, y, x) = batch[n]->rgb.at(x, y, c);
    return t;
}

TrainStats train(const RunConfig& cfg, std::ostream& log) {
    const auto meshes = build_meshes(cfg);
    auto samples = load_samples(cfg, meshes);
    if (samples.empty()) throw std::runtime_error("train: no samples");
    const auto ids = class_id_table(meshes);

    ModelConfig mc = cfg.model;
    mc.heads.num_classes = int(ids.size());
    mc.heads.anchors_per_location = cfg.anchor_spec.anchors_per_location();
    Model<float> model(mc, cfg.seed);
    if (cfg.resume) model.load(cfg.checkpoint_path);

    const int W = samples[0].rgb.width, H = samples[0].rgb.height;
    const auto anchors = generate_anchors(W, H, cfg.anchor_spec);
    const int A = mc.heads.anchors_per_location;
    const int K = mc.heads.num_classes;

    std::vector<ImageTargets> all_targets;
    all_targets.reserve(samples.size());
    for (const auto& s : samples) all_targets.push_back(make_targets(s, anchors, ids));

    std::vector<TensorPtr<float>> train_params;
    for (const auto& e : model.params().entries()) {
        if (cfg.freeze_backbone && e.name.rfind("backbone", 0) == 0) continue;
        train_params.push_back(e.tensor);
    }
    AdamConfig<float> ac;
    ac.lr = float(cfg.optimizer.lr);
    Adam<float> adam(train_params, ac);

    TrainStats stats;
    std::mt19937_64 shuffle_rng(mix(cfg.seed, 0x51ULL));
    double best_loss = std::numeric_limits<double>::infinity();
    int plateau = 0;
    double lr = cfg.optimizer.lr;

    for (int epoch = 0; epoch < cfg.optimizer.epochs; ++epoch) {
        std::vector<int> order(samples.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        LossBreakdown epoch_sum;
        int batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += std::size_t(cfg.optimizer.batch_size)) {
            if (cfg.optimizer.max_steps > 0 && stats.steps >= cfg.optimizer.max_steps) break;
            const std::size_t end =
                std::min(order.size(), start + std::size_t(cfg.optimizer.batch_size));

            std::vector<SceneSample> augmented;
            std::vector<const SceneSample*> batch;
            std::vector<ImageTargets> targets;
            for (std::size_t bi = start; bi < end; ++bi) {
                const int si = order[bi];
                targets.push_back(all_targets[si]);
                if (cfg.augment_enabled) {
                    SceneSample s;
                    s.rgb = samples[si].rgb;
                    std::mt19937_64 arng(mix(mix(cfg.seed, epoch + 1), si + 1));
                    s.rgb = augment(s.rgb, cfg.augment, arng);
                    augmented.push_back(std::move(s));
                }
            }
            if (cfg.augment_enabled)
                for (const auto& s : augmented) batch.push_back(&s);
            else
                for (std::size_t bi = start; bi < end; ++bi) batch.push_back(&samples[order[bi]]);

            auto input = batch_to_tensor(batch);
            auto out = model.forward(input);
            auto [loss, breakdown] =
                total_loss(out, targets, anchors, A, K, cfg.loss_weights, cfg.focal, cfg.corr_loss,
                           model.heads().l2_regularized_weights(), mc.heads.l2_lambda);
            model.params().zero_grads();
            loss->backward();
            adam.step();
            ++stats.steps;
            ++batches;
            epoch_sum.correspondence += breakdown.correspondence;
            epoch_sum.location += breakdown.location;
            epoch_sum.mask += breakdown.mask;
            epoch_sum.l2 += breakdown.l2;
            epoch_sum.total += breakdown.total;
        }
        if (batches == 0) break;

        const double mean_total = epoch_sum.total / batches;
        stats.epoch_losses.push_back(mean_total);
        stats.final_loss = mean_total;
        stats.epochs = epoch + 1;
        log << "epoch " << epoch << " corr " << epoch_sum.correspondence / batches << " loc "
            << epoch_sum.location / batches << " mask " << epoch_sum.mask / batches << " l2 "
            << epoch_sum.l2 / batches << " total " << mean_total << " lr " << lr << "\n";

        // learning-rate decay when the epoch-mean loss plateaus
        if (mean_total < best_loss - 1e-12) {
            best_loss = mean_total;
            plateau = 0;
        } else if (++plateau >= cfg.optimizer.plateau_patience) {
            lr *= cfg.optimizer.plateau_factor;
            adam.set_lr(float(lr));
            plateau = 0;
        }
        if (cfg.optimizer.max_steps > 0 && stats.steps >= cfg.optimizer.max_steps) break;
    }

    model.save(cfg.checkpoint_path);
    return stats;
}

std::vector<DetectionRecord> infer_samples(const Model<float>& model,
                                           const std::vector<SceneSample>& samples,
                                           const std::vector<MeshModel>& meshes,
                                           const RunConfig& cfg) {
    const auto ids = class_id_table(meshes);
    const int A = model.config().heads.anchors_per_location;
    const int K = model.config().heads.num_classes;

    std::vector<DetectionRecord> records;
    std::vector<Anchor> anchors;
    int anchor_w = -1, anchor_h = -1;

    for (const auto& sample : samples) {
        const auto t0 = std::chrono::steady_clock::now();
        if (sample.rgb.width != anchor_w || sample.rgb.height != anchor_h) {
            anchors = generate_anchors(sample.rgb.width, sample.rgb.height, cfg.anchor_spec);
            anchor_w = sample.rgb.width;
            anchor_h = sample.rgb.height;
        }

        std::vector<const SceneSample*> batch = {&sample};
        auto out = model.forward(batch_to_tensor(batch));

        for (int k = 0; k < K; ++k) {
            const MeshModel* mesh = nullptr;
            for (const auto& m : meshes)
                if (m.class_id == ids[k]) mesh = &m;
            const Box3D box = mesh->bounding_box();

            std::vector<Correspondence> corrs;
            double best_score = 0;
            Corners2D best_corners{};
            std::size_t anchor_idx = 0;
            for (std::size_t l = 0; l < out.location.size(); ++l) {
                const auto& loc = *out.location[l];
                const auto& cor = *out.correspondence[l];
                const int gh = loc.h(), gw = loc.w();
                for (int i = 0; i < gh; ++i)
                    for (int j = 0; j < gw; ++j)
                        for (int a = 0; a < A; ++a, ++anchor_idx) {
                            const double p = loc.at(0, a * K + k, i, j);
                            if (p <= cfg.eval.score_threshold) continue;
                            std::array<double, 16> vals;
                            for (int c = 0; c < 16; ++c)
                                vals[c] = cor.at(0, a * 16 + c, i, j);
                            const Corners2D decoded =
                                decode_correspondences(vals, anchors[anchor_idx]);
                            for (int c = 0; c < 8; ++c)
                                corrs.push_back({decoded[c], box[c]});
                            if (p > best_score) {
                                best_score = p;
                                best_corners = decoded;
                            }
                        }
            }
            if (corrs.size() < 6) continue;

            RansacConfig rc = cfg.ransac;
            rc.seed = mix(mix(cfg.ransac.seed, sample.image_id + 1), k + 1);
            const auto result = ransac_pnp(corrs, sample.K, rc);
            if (!result) continue;

            DetectionRecord rec;
            rec.image_id = sample.image_id;
            rec.class_id = ids[k];
            rec.score = best_score;
            rec.corners = best_corners;
            rec.pose = result->pose;

            if (cfg.use_icp && sample.depth) {
                // stride-8 mask channel, upsampled nearest to full res
                const auto& m = *out.mask;
                Mask full(std::size_t(sample.rgb.width) * sample.rgb.height, 0);
                for (int y = 0; y < sample.rgb.height; ++y)
                    for (int x = 0; x < sample.rgb.width; ++x)
                        full[std::size_t(y) * sample.rgb.width + x] =
                            m.at(0, k, std::min(y / 8, m.h() - 1), std::min(x / 8, m.w() - 1)) >
                                    0.5f
                                ? 1
                                : 0;
                const PointCloud scene = backproject(sample.depth->mm, full, sample.rgb.width,
                                                     sample.rgb.height, sample.K);
                const PointCloud model_cloud = sample_surface(*mesh, 400, 7);
                // Align the scene cloud onto the model: every backprojected
                // depth pixel lies on the model surface, while half the model
                // cloud is self-occluded and has no scene counterpart, which
                // would bias the opposite matching direction.
                const Pose inv{rec.pose.R.transpose(), -rec.pose.R.transpose() * rec.pose.t};
                const auto icp = icp_refine(scene, model_cloud, inv, cfg.icp);
                if (icp.refined)
                    rec.refined =
                        Pose{icp.pose.R.transpose(), -icp.pose.R.transpose() * icp.pose.t};
            }

            rec.time_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            records.push_back(std::move(rec));
        }
    }
    return records;
}

EvalOutput evaluate_detections(const std::vector<DetectionRecord>& detections,
                               const std::vector<SceneSample>& samples,
                               const std::vector<MeshModel>& meshes, const RunConfig& cfg) {
    std::map<int, ScoringModel> models;
    EvalConfig ec = cfg.eval;
    for (const auto& m : meshes) {
        models[m.class_id] = {subsample_points(m.vertices), m.diameter};
        if (m.symmetric) ec.symmetric_classes.insert(m.class_id);
    }

    std::vector<Detection> dets;
    std::vector<ResultRow> rows;
    for (const auto& r : detections) {
        const Pose pose = r.refined.value_or(r.pose);
        dets.push_back({r.image_id, r.class_id, r.score, pose});
        rows.push_back({cfg.scene_id, r.image_id, r.class_id, r.score, pose, r.time_ms / 1000.0});
    }
    std::vector<GroundTruthPose> gts;
    for (const auto& s : samples)
        for (const auto& obj : s.objects) gts.push_back({s.image_id, obj.class_id, obj.pose});

    EvalOutput out;
    out.report = evaluate(dets, gts, models, ec);
    out.rows = std::move(rows);
    return out;
}

// ---- selftest ----

namespace {

bool check(std::ostream& log, const std::string& name, bool ok) {
    log << (ok ? "pass" : "FAIL") << "  " << name << "\n";
    return ok;
}

bool selftest_gradients(std::ostream& log) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd(0.0, 1.0);
    auto randn = [&](TensorPtr<double>& t) {
        for (auto& v : t->values) v = nd(rng);
    };
    bool ok = true;
    for (int trial = 0; trial < 5; ++trial) {
        auto x = Tensor<double>::create({1, 2, 6, 6}, true);
        auto w = Tensor<double>::create({3, 2, 3, 3}, true);
        auto b = Tensor<double>::create({3, 1, 1, 1}, true);
        randn(x);
        randn(w);
        randn(b);
        auto build = [&]() {
            auto y = resize_down2(resize_up2(relu(conv2d(x, w, b, 1, 1))));
            double s = 0;
            for (double v : y->values) s += v;
            return make_scalar_node<double>({y}, s, [y](double up) {
                y->ensure_grad();
                for (auto& g : y->grad) g += up;
            });
        };
        const double err = finite_diff_max_rel_error({x, w, b}, build, 1e-5, 20, trial);
        ok = ok && err < 1e-4;
    }
    return check(log, "gradient checks (conv/relu/resize)", ok);
}

bool selftest_anchors(std::ostream& log) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const AnchorSpec spec;
    const auto anchors = generate_anchors(128, 96, spec);
    bool ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<GroundTruthObject> gts;
        for (int g = 0; g < 3; ++g) {
            GroundTruthObject gt;
            gt.class_id = g;
            const double x = uni(rng) * 90, y = uni(rng) * 60;
            gt.box = {x, y, x + 10 + uni(rng) * 40, y + 10 + uni(rng) * 30};
            gts.push_back(gt);
        }
        const auto as = assign_targets(anchors, gts);
        for (std::size_t a = 0; a < anchors.size(); ++a) {
            // brute-force oracle
            double best = 0.5;
            int best_g = -1;
            for (std::size_t g = 0; g < gts.size(); ++g) {
                const double v = iou(anchors[a].box, gts[g].box);
                if (v > best) {
                    best = v;
                    best_g = int(g);
                }
            }
            const int expect = best_g < 0 ? -1 : gts[best_g].class_id;
            if (as.labels[a] != expect) ok = false;
        }
    }
    // encode/decode roundtrip
    for (int trial = 0; trial < 50; ++trial) {
        Corners2D c;
        for (auto& p : c) p = {uni(rng) * 200, uni(rng) * 150};
        const Anchor a{{uni(rng) * 50, uni(rng) * 50, 60 + uni(rng) * 50, 60 + uni(rng) * 50}, 0};
        const auto back = decode_correspondences(encode_correspondences(c, a), a);
        for (int i = 0; i < 8; ++i)
            if ((back[i] - c[i]).norm() > 1e-6) ok = false;
    }
    return check(log, "anchor assignment and correspondence roundtrip", ok);
}

bool selftest_geometry(std::ostream& log, bool inject_failure) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const Intrinsics K{500, 500, 320, 240};
    bool ok = true;
    for (int trial = 0; trial < 10; ++trial) {
        Pose gt;
        gt.R = (Eigen::AngleAxisd(uni(rng) * M_PI, Eigen::Vector3d(uni(rng), uni(rng), uni(rng))
                                                        .normalized()))
                   .toRotationMatrix();
        gt.t = {uni(rng) * 100, uni(rng) * 100, 800 + uni(rng) * 200};
        std::vector<Correspondence> corrs;
        for (int i = 0; i < 24; ++i) {
            const Eigen::Vector3d p(uni(rng) * 80, uni(rng) * 80, uni(rng) * 80);
            corrs.push_back({project_point(p, gt, K), p});
        }
        RansacConfig rc;
        rc.seed = trial;
        const auto res = ransac_pnp(corrs, K, rc);
        if (!res || rotation_angle(res->pose.R, gt.R) > 1e-4 ||
            (res->pose.t - gt.t).norm() > 1e-2)
            ok = false;
    }
    // icp recovery from a perturbed start
    for (int trial = 0; trial < 5; ++trial) {
        PointCloud model;
        for (int i = 0; i < 300; ++i)
            model.push_back({uni(rng) * 60, uni(rng) * 60, uni(rng) * 60});
        Pose gt;
        gt.R = Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitY()).toRotationMatrix();
        gt.t = {30, -20, 900};
        PointCloud scene;
        for (const auto& p : model) scene.push_back(gt.apply(p));
        Pose init = gt;
        init.R = Eigen::AngleAxisd(5.0 * M_PI / 180.0, Eigen::Vector3d::UnitX()) * gt.R;
        init.t += Eigen::Vector3d(5, -5, 7);
        const auto res = icp_refine(model, scene, init);
        if (rotation_angle(res.pose.R, gt.R) > 0.1 * M_PI / 180.0 ||
            (res.pose.t - gt.t).norm() > 0.5)
            ok = false;
    }
    if (inject_failure) ok = false;
    return check(log, "geometry roundtrips (ransac-pnp, icp)", ok);
}

bool selftest_metrics(std::ostream& log) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    bool ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        PointCloud pts;
        for (int i = 0; i < 40; ++i) pts.push_back({uni(rng) * 50, uni(rng) * 50, uni(rng) * 50});
        Pose a, b;
        a.R = Eigen::AngleAxisd(uni(rng), Eigen::Vector3d(uni(rng), uni(rng), uni(rng)).normalized())
                  .toRotationMatrix();
        a.t = {uni(rng) * 10, uni(rng) * 10, uni(rng) * 10};
        b.R = Eigen::AngleAxisd(uni(rng), Eigen::Vector3d(uni(rng), uni(rng), uni(rng)).normalized())
                  .toRotationMatrix();
        b.t = {uni(rng) * 10, uni(rng) * 10, uni(rng) * 10};
        // brute-force oracles
        double add_oracle = 0;
        for (const auto& p : pts) add_oracle += (a.apply(p) - b.apply(p)).norm();
        add_oracle /= double(pts.size());
        const double add_v = add_score(pts, a, b);
        const double adds_v = adds_score(pts, a, b);
        if (std::abs(add_v - add_oracle) > 1e-9 * std::max(1.0, add_oracle)) ok = false;
        if (adds_v > add_v + 1e-12) ok = false;
    }
    return check(log, "metric oracles (add/adds)", ok);
}

}  // namespace

bool selftest(std::ostream& log, bool inject_failure) {
    bool ok = true;
    ok &= selftest_gradients(log);
    ok &= selftest_anchors(log);
    ok &= selftest_geometry(log, inject_failure);
    ok &= selftest_metrics(log);
    log << (ok ? "selftest passed" : "selftest FAILED") << "\n";
    return ok;
}

}  // namespace poselab
