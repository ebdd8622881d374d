#pragma once

#include <random>

#include "poselab/image.hpp"

namespace poselab {

/// One augmentation row: application chance, chance of sampling the
/// parameter independently per channel (negative = whole-image only),
/// and the uniform parameter range.
struct AugmentationStep {
    double chance = 0;
    double per_channel_chance = -1;
    double lo = 0, hi = 0;
};

struct AugmentationConfig {
    AugmentationStep gaussian_blur{0.2, -1, 0.0, 2.0};
    AugmentationStep mixed_blur{0.2, -1, 3, 7};  // average / median / motion, kernel size
    AugmentationStep bilateral_blur{0.2, -1, 1, 7};
    AugmentationStep hue_saturation{0.5, -1, -15, 15};  // 8-bit-equivalent HSV shift
    AugmentationStep grayscale{0.5, -1, 0.0, 0.2};
    AugmentationStep add{0.5, 0.5, -0.04, 0.04};
    AugmentationStep multiply{0.5, 0.5, 0.75, 1.25};
    AugmentationStep gamma_contrast{0.5, 0.5, 0.75, 1.25};
    AugmentationStep sigmoid_contrast{0.5, 0.5, 0, 10};
    AugmentationStep log_contrast{0.5, 0.5, 0.75, 1.0};
    AugmentationStep linear_contrast{0.5, 0.5, 0.7, 1.3};
};

/// Applies the configured augmentations in random order, each with its
/// chance. Output stays in [0,1] with unchanged dimensions; geometry
/// (boxes, masks, corners) is never touched.
ImageRGB augment(const ImageRGB& rgb, const AugmentationConfig& cfg, std::mt19937_64& rng);

}  // namespace poselab
