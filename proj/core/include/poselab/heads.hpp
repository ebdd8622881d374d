#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "poselab/nn.hpp"
#include "poselab/pyramid.hpp"
#include "poselab/tensor.hpp"

namespace poselab {

struct HeadConfig {
    int location_width = 256;
    int correspondence_width = 512;
    int num_classes = 1;        // K
    int anchors_per_location = 9;  // A
    double l2_lambda = 0.001;
    double location_prior = 0.01;  // pi for the final location bias init
};

template <class T>
struct HeadOutputs {
    std::vector<TensorPtr<T>> location;        // per level, sigmoid scores, A*K channels
    std::vector<TensorPtr<T>> correspondence;  // per level, linear, A*16 channels
    TensorPtr<T> mask;                         // stride-8 sigmoid scores, K channels
};

/// The three task heads. Each head is four 3x3 convs with ReLU followed
/// by a final 3x3 conv. Location and correspondence heads are shared
/// over all pyramid levels; the mask head consumes P3 only.
template <class T>
class Heads {
public:
    Heads(const HeadConfig& cfg, int pyramid_width, std::mt19937_64& rng) : cfg_(cfg) {
        build_tower(loc_tower_, pyramid_width, cfg.location_width, rng);
        loc_final_ = ConvLayer<T>(cfg.anchors_per_location * cfg.num_classes, cfg.location_width, 3,
                                  1, rng);
        // focal-loss prior: start every anchor near p = location_prior
        const double b = -std::log((1.0 - cfg.location_prior) / cfg.location_prior);
        for (auto& v : loc_final_.bias->values) v = T(b);

        build_tower(corr_tower_, pyramid_width, cfg.correspondence_width, rng);
        corr_final_ = ConvLayer<T>(cfg.anchors_per_location * 16, cfg.correspondence_width, 3, 1,
                                   rng);

        build_tower(mask_tower_, pyramid_width, cfg.location_width, rng);
        mask_final_ = ConvLayer<T>(cfg.num_classes, cfg.location_width, 3, 1, rng);
    }

    HeadOutputs<T> forward(const FeaturePyramid<T>& pyr) const {
        HeadOutputs<T> out;
        for (const auto& level : {pyr.p3, pyr.p4, pyr.p5}) {
            out.location.push_back(sigmoid(loc_final_.forward(run_tower(loc_tower_, level))));
            out.correspondence.push_back(corr_final_.forward(run_tower(corr_tower_, level)));
        }
        out.mask = sigmoid(mask_final_.forward(run_tower(mask_tower_, pyr.p3)));
        return out;
    }

    /// Weights subject to l2 regularization (the four correspondence
    /// tower convs).
    std::vector<TensorPtr<T>> l2_regularized_weights() const {
        std::vector<TensorPtr<T>> ws;
        for (const auto& l : corr_tower_) ws.push_back(l.weight);
        return ws;
    }

    void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
        for (std::size_t i = 0; i < 4; ++i) {
            loc_tower_[i].register_params(reg, prefix + ".loc.conv" + std::to_string(i));
            corr_tower_[i].register_params(reg, prefix + ".corr.conv" + std::to_string(i));
            mask_tower_[i].register_params(reg, prefix + ".mask.conv" + std::to_string(i));
        }
        loc_final_.register_params(reg, prefix + ".loc.final");
        corr_final_.register_params(reg, prefix + ".corr.final");
        mask_final_.register_params(reg, prefix + ".mask.final");
    }

    const HeadConfig& config() const { return cfg_; }

private:
    static void build_tower(std::vector<ConvLayer<T>>& tower, int in_width, int width,
                            std::mt19937_64& rng) {
        tower.emplace_back(width, in_width, 3, 1, rng);
        for (int i = 1; i < 4; ++i) tower.emplace_back(width, width, 3, 1, rng);
    }
    static TensorPtr<T> run_tower(const std::vector<ConvLayer<T>>& tower, TensorPtr<T> x) {
        for (const auto& l : tower) x = relu(l.forward(x));
        return x;
    }

    HeadConfig cfg_;
    std::vector<ConvLayer<T>> loc_tower_, corr_tower_, mask_tower_;
    ConvLayer<T> loc_final_, corr_final_, mask_final_;
};

}  // namespace poselab
