#pragma once

#include <random>
#include <string>
#include <vector>

#include "poselab/nn.hpp"
#include "poselab/tensor.hpp"

namespace poselab {

struct BackboneConfig {
    std::vector<int> stage_widths = {32, 64, 128};  // C3, C4, C5
    int stem_width = 16;
    int convs_per_stage = 2;
};

template <class T>
struct BackboneFeatures {
    TensorPtr<T> c3, c4, c5;  // strides 8, 16, 32
};

/// Small convolutional backbone trained from scratch. Emits C3/C4/C5 at
/// strides 8/16/32 relative to the input.
template <class T>
class Backbone {
public:
    Backbone(const BackboneConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
        // downsampling = stride-1 3x3 conv followed by a nearest x2
        // subsample; keeps every conv at 3x3 with exact output arithmetic
        stem_.emplace_back(cfg.stem_width, 3, 3, 1, rng);
        stem_.emplace_back(cfg.stem_width, cfg.stem_width, 3, 1, rng);
        int in_ch = cfg.stem_width;
        for (int s = 0; s < 3; ++s) {
            std::vector<ConvLayer<T>> stage;
            stage.emplace_back(cfg.stage_widths[s], in_ch, 3, 1, rng);
            for (int i = 1; i < cfg.convs_per_stage; ++i)
                stage.emplace_back(cfg.stage_widths[s], cfg.stage_widths[s], 3, 1, rng);
            in_ch = cfg.stage_widths[s];
            stages_.push_back(std::move(stage));
        }
    }

    BackboneFeatures<T> forward(const TensorPtr<T>& image) const {
        if (image->h() % 32 != 0 || image->w() % 32 != 0)
            throw std::invalid_argument("backbone: input extents " + std::to_string(image->h()) +
                                        "x" + std::to_string(image->w()) +
                                        " must be divisible by 32");
        auto x = image;
        // conv at the incoming resolution, then subsample: the conv sees
        // every pixel before decimation, so fine localization survives
        for (const auto& l : stem_) x = resize_down2(relu(l.forward(x)));
        BackboneFeatures<T> out;
        TensorPtr<T>* maps[3] = {&out.c3, &out.c4, &out.c5};
        for (int s = 0; s < 3; ++s) {
            bool first = true;
            for (const auto& l : stages_[s]) {
                auto y = relu(l.forward(x));
                x = first ? resize_down2(y) : y;
                first = false;
            }
            *maps[s] = x;
        }
        return out;
    }

    void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
        for (std::size_t i = 0; i < stem_.size(); ++i)
            stem_[i].register_params(reg, prefix + ".stem" + std::to_string(i));
        for (std::size_t s = 0; s < stages_.size(); ++s)
            for (std::size_t i = 0; i < stages_[s].size(); ++i)
                stages_[s][i].register_params(
                    reg, prefix + ".stage" + std::to_string(s + 3) + ".conv" + std::to_string(i));
    }

    const BackboneConfig& config() const { return cfg_; }

private:
    BackboneConfig cfg_;
    std::vector<ConvLayer<T>> stem_;
    std::vector<std::vector<ConvLayer<T>>> stages_;
};

}  // namespace poselab
