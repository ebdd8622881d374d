#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "poselab/anchors.hpp"
#include "poselab/heads.hpp"
#include "poselab/tensor.hpp"

namespace poselab {

struct FocalConfig {
    double alpha = 0.25;
    double gamma = 2.0;
};

struct CorrLossConfig {
    double delta = 0.8;      // smooth-L1 quadratic/linear transition
    double edge_weight = 1.0;
};

struct LossWeights {
    double correspondence = 0.125;
    double location = 1.0;
    double mask = 0.1;
};

struct LossBreakdown {
    double correspondence = 0;
    double location = 0;
    double mask = 0;
    double l2 = 0;
    double total = 0;
};

namespace loss_detail {

inline constexpr double kProbEps = 1e-7;

/// Focal term on a sigmoid score, with derivative w.r.t. the score.
/// Scores are clamped kProbEps away from {0,1}; the derivative is zero
/// where the clamp is active.
inline double focal_term(double p, int y, const FocalConfig& cfg, double* dp = nullptr) {
    const bool clamped = p < kProbEps || p > 1.0 - kProbEps;
    p = std::clamp(p, kProbEps, 1.0 - kProbEps);
    double v, g;
    if (y == 1) {
        const double q = 1.0 - p;
        v = -cfg.alpha * std::pow(q, cfg.gamma) * std::log(p);
        g = cfg.alpha * cfg.gamma * std::pow(q, cfg.gamma - 1.0) * std::log(p) -
            cfg.alpha * std::pow(q, cfg.gamma) / p;
    } else {
        v = -(1.0 - cfg.alpha) * std::pow(p, cfg.gamma) * std::log(1.0 - p);
        g = -(1.0 - cfg.alpha) * cfg.gamma * std::pow(p, cfg.gamma - 1.0) * std::log(1.0 - p) +
            (1.0 - cfg.alpha) * std::pow(p, cfg.gamma) / (1.0 - p);
    }
    if (dp) *dp = clamped ? 0.0 : g;
    return v;
}

inline double smooth_l1(double r, double delta, double* dr = nullptr) {
    const double a = std::abs(r);
    if (a < delta) {
        if (dr) *dr = r / delta;
        return 0.5 * r * r / delta;
    }
    if (dr) *dr = r > 0 ? 1.0 : -1.0;
    return a - 0.5 * delta;
}

}  // namespace loss_detail

/// Per-image training targets: anchor assignment plus the stride-8 mask
/// grid (K * h8 * w8, class-major, 0/1).
struct ImageTargets {
    TargetAssignment assignment;
    std::vector<std::uint8_t> mask_grid;
};

/// Location-head focal loss: summed over every anchor and class,
/// normalized per image by max(1, positives), averaged over the batch.
template <class T>
TensorPtr<T> location_loss(const std::vector<TensorPtr<T>>& levels,
                           const std::vector<ImageTargets>& targets, int A, int K,
                           const FocalConfig& cfg) {
    const int N = levels[0]->n();
    double total = 0;
    // grads[level][flat index] accumulated in the same pass
    std::vector<std::vector<double>> grads(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) grads[l].assign(levels[l]->values.size(), 0.0);

    for (int n = 0; n < N; ++n) {
        const auto& as = targets[n].assignment;
        const double norm = std::max(1, as.num_positive);
        std::size_t anchor_idx = 0;
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const auto& t = *levels[l];
            const int gh = t.h(), gw = t.w();
            for (int i = 0; i < gh; ++i)
                for (int j = 0; j < gw; ++j)
                    for (int a = 0; a < A; ++a, ++anchor_idx) {
                        const int label = as.labels[anchor_idx];
                        for (int k = 0; k < K; ++k) {
                            const std::size_t idx =
                                ((std::size_t(n) * t.c() + (a * K + k)) * gh + i) * gw + j;
                            double dp;
                            total += loss_detail::focal_term(double(t.values[idx]), label == k,
                                                             cfg, &dp) /
                                     (norm * N);
                            grads[l][idx] += dp / (norm * N);
                        }
                    }
        }
    }

    std::vector<TensorPtr<T>> inputs(levels.begin(), levels.end());
    auto node = make_scalar_node<T>(inputs, T(total), [levels, grads](T up) {
        for (std::size_t l = 0; l < levels.size(); ++l) {
            if (!levels[l]->requires_grad) continue;
            levels[l]->ensure_grad();
            for (std::size_t i = 0; i < grads[l].size(); ++i)
                levels[l]->grad[i] += up * T(grads[l][i]);
        }
    });
    return node;
}

/// Mask-head focal loss: summed over classes and stride-8 cells,
/// normalized by the cell count, averaged over the batch.
template <class T>
TensorPtr<T> mask_loss(const TensorPtr<T>& mask, const std::vector<ImageTargets>& targets, int K,
                       const FocalConfig& cfg) {
    const int N = mask->n(), gh = mask->h(), gw = mask->w();
    const double norm = double(gh) * gw;
    double total = 0;
    std::vector<double> grads(mask->values.size(), 0.0);
    for (int n = 0; n < N; ++n) {
        const auto& grid = targets[n].mask_grid;
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < gh; ++i)
                for (int j = 0; j < gw; ++j) {
                    const std::size_t idx = ((std::size_t(n) * K + k) * gh + i) * gw + j;
                    const int y = grid[(std::size_t(k) * gh + i) * gw + j];
                    double dp;
                    total += loss_detail::focal_term(double(mask->values[idx]), y, cfg, &dp) /
                             (norm * N);
                    grads[idx] += dp / (norm * N);
                }
    }
    return make_scalar_node<T>({mask}, T(total), [mask, grads](T up) {
        if (!mask->requires_grad) return;
        mask->ensure_grad();
        for (std::size_t i = 0; i < grads.size(); ++i) mask->grad[i] += up * T(grads[i]);
    });
}

/// Correspondence loss over positive anchors only: smooth-L1 on the 16
/// normalized residuals plus an edge-length penalty over the 12 box
/// edges of the decoded pixel corners. Per-anchor values are averaged
/// over positives, then over the batch.
template <class T>
TensorPtr<T> correspondence_loss(const std::vector<TensorPtr<T>>& levels,
                                 const std::vector<ImageTargets>& targets,
                                 const std::vector<Anchor>& anchors, int A,
                                 const CorrLossConfig& cfg) {
    const int N = levels[0]->n();
    double total = 0;
    std::vector<std::vector<double>> grads(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) grads[l].assign(levels[l]->values.size(), 0.0);

    for (int n = 0; n < N; ++n) {
        const auto& as = targets[n].assignment;
        if (as.num_positive == 0) continue;
        const double anorm = double(as.num_positive) * N;
        std::size_t anchor_idx = 0;
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const auto& t = *levels[l];
            const int gh = t.h(), gw = t.w();
            for (int i = 0; i < gh; ++i)
                for (int j = 0; j < gw; ++j)
                    for (int a = 0; a < A; ++a, ++anchor_idx) {
                        if (as.labels[anchor_idx] < 0) continue;
                        const Anchor& anc = anchors[anchor_idx];
                        const auto& tgt = as.targets[anchor_idx];
                        std::array<double, 16> pred;
                        std::array<std::size_t, 16> idx;
                        for (int c = 0; c < 16; ++c) {
                            idx[c] = ((std::size_t(n) * t.c() + (a * 16 + c)) * gh + i) * gw + j;
                            pred[c] = double(t.values[idx[c]]);
                        }
                        std::array<double, 16> dpred{};
                        // point term, mean over the 16 residuals
                        for (int c = 0; c < 16; ++c) {
                            double dr;
                            total += loss_detail::smooth_l1(pred[c] - tgt[c], cfg.delta, &dr) /
                                     (16.0 * anorm);
                            dpred[c] += dr / 16.0;
                        }
                        // edge term on decoded pixel corners; residual is
                        // normalized by the anchor size so it lives on the
                        // same scale as the encoded point residuals
                        const double aw = anc.box.width(), ah = anc.box.height();
                        const double sa = 0.5 * (aw + ah);
                        auto corner = [&](const std::array<double, 16>& v, int k) {
                            return Eigen::Vector2d(anc.box.x1 + v[2 * k] * aw,
                                                   anc.box.y1 + v[2 * k + 1] * ah);
                        };
                        for (const auto& e : kBox3DEdges) {
                            const Eigen::Vector2d ep = corner(pred, e[0]) - corner(pred, e[1]);
                            const Eigen::Vector2d eg = corner(tgt, e[0]) - corner(tgt, e[1]);
                            const double lp = ep.norm();
                            double dr;
                            total += cfg.edge_weight *
                                     loss_detail::smooth_l1((lp - eg.norm()) / sa, cfg.delta,
                                                            &dr) /
                                     (12.0 * anorm);
                            if (lp > 1e-12) {
                                const Eigen::Vector2d dir = ep / lp;
                                const double s = cfg.edge_weight * dr / (12.0 * sa);
                                dpred[2 * e[0]] += s * dir.x() * aw;
                                dpred[2 * e[0] + 1] += s * dir.y() * ah;
                                dpred[2 * e[1]] -= s * dir.x() * aw;
                                dpred[2 * e[1] + 1] -= s * dir.y() * ah;
                            }
                        }
                        for (int c = 0; c < 16; ++c) grads[l][idx[c]] += dpred[c] / anorm;
                    }
        }
    }

    std::vector<TensorPtr<T>> inputs(levels.begin(), levels.end());
    return make_scalar_node<T>(inputs, T(total), [levels, grads](T up) {
        for (std::size_t l = 0; l < levels.size(); ++l) {
            if (!levels[l]->requires_grad) continue;
            levels[l]->ensure_grad();
            for (std::size_t i = 0; i < grads[l].size(); ++i)
                levels[l]->grad[i] += up * T(grads[l][i]);
        }
    });
}

/// lambda * sum of squared weights.
template <class T>
TensorPtr<T> l2_penalty(const std::vector<TensorPtr<T>>& weights, double lambda) {
    double total = 0;
    for (const auto& w : weights)
        for (T v : w->values) total += double(v) * double(v);
    total *= lambda;
    return make_scalar_node<T>(weights, T(total), [weights, lambda](T up) {
        for (const auto& w : weights) {
            if (!w->requires_grad) continue;
            w->ensure_grad();
            for (std::size_t i = 0; i < w->values.size(); ++i)
                w->grad[i] += up * T(2.0 * lambda) * w->values[i];
        }
    });
}

template <class T>
TensorPtr<T> scale(const TensorPtr<T>& x, double c) {
    return make_scalar_node<T>({x}, T(c * double(x->values[0])), [x, c](T up) {
        if (!x->requires_grad) return;
        x->ensure_grad();
        x->grad[0] += up * T(c);
    });
}

/// Weighted sum of the head losses plus the correspondence-tower l2
/// penalty. Returns the scalar graph node and the breakdown.
template <class T>
std::pair<TensorPtr<T>, LossBreakdown> total_loss(
    const HeadOutputs<T>& out, const std::vector<ImageTargets>& targets,
    const std::vector<Anchor>& anchors, int A, int K, const LossWeights& weights,
    const FocalConfig& focal, const CorrLossConfig& corr_cfg,
    const std::vector<TensorPtr<T>>& l2_weights, double lambda) {
    auto l_loc = location_loss(out.location, targets, A, K, focal);
    auto l_corr = correspondence_loss(out.correspondence, targets, anchors, A, corr_cfg);
    auto l_mask = mask_loss(out.mask, targets, K, focal);
    auto l_l2 = l2_penalty(l2_weights, lambda);
    LossBreakdown b;
    b.location = double(l_loc->values[0]);
    b.correspondence = double(l_corr->values[0]);
    b.mask = double(l_mask->values[0]);
    b.l2 = double(l_l2->values[0]);
    b.total = weights.correspondence * b.correspondence + weights.location * b.location +
              weights.mask * b.mask + b.l2;
    auto node = add(add(scale(l_corr, weights.correspondence), scale(l_loc, weights.location)),
                    add(scale(l_mask, weights.mask), l_l2));
    return {node, b};
}

}  // namespace poselab
