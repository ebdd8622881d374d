#pragma once

#include <random>

#include "poselab/backbone.hpp"
#include "poselab/checkpoint.hpp"
#include "poselab/heads.hpp"
#include "poselab/pyramid.hpp"

namespace poselab {

struct ModelConfig {
    BackboneConfig backbone;
    PyramidConfig pyramid;
    HeadConfig heads;
};

/// The full single-shot network: backbone -> aggregator -> task heads.
/// One instance serves all object classes.
template <class T>
class Model {
public:
    Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        std::mt19937_64 rng(seed);
        backbone_ = std::make_unique<Backbone<T>>(cfg.backbone, rng);
        aggregator_ = std::make_unique<PyramidAggregator<T>>(cfg.pyramid, cfg.backbone, rng);
        heads_ = std::make_unique<Heads<T>>(cfg.heads, cfg.pyramid.width, rng);
        backbone_->register_params(params_, "backbone");
        aggregator_->register_params(params_, "pyramid");
        heads_->register_params(params_, "heads");
    }

    HeadOutputs<T> forward(const TensorPtr<T>& image) const {
        return heads_->forward(aggregator_->forward(backbone_->forward(image)));
    }

    FeaturePyramid<T> pyramid_forward(const TensorPtr<T>& image) const {
        return aggregator_->forward(backbone_->forward(image));
    }

    const ModelConfig& config() const { return cfg_; }
    ParamRegistry<T>& params() { return params_; }
    const ParamRegistry<T>& params() const { return params_; }
    const PyramidAggregator<T>& aggregator() const { return *aggregator_; }
    const Heads<T>& heads() const { return *heads_; }
    const Backbone<T>& backbone() const { return *backbone_; }

    void save(const std::string& path) const { save_checkpoint(path, params_); }
    void load(const std::string& path) { load_checkpoint(path, params_); }

private:
    ModelConfig cfg_;
    std::unique_ptr<Backbone<T>> backbone_;
    std::unique_ptr<PyramidAggregator<T>> aggregator_;
    std::unique_ptr<Heads<T>> heads_;
    ParamRegistry<T> params_;
};

}  // namespace poselab
