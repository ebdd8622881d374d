#include "poselab/augment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace poselab {
namespace {

using Rng = std::mt19937_64;

double uni(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}
bool coin(Rng& rng, double p) { return uni(rng, 0.0, 1.0) < p; }

float clamp01(double v) { return float(std::clamp(v, 0.0, 1.0)); }

/// Applies a scalar map; samples the parameter per channel with the
/// step's per-channel chance, otherwise once for all channels.
void per_channel_map(ImageRGB& img, const AugmentationStep& st, Rng& rng,
                     const std::function<double(double v, double param)>& fn) {
    double params[3];
    if (st.per_channel_chance >= 0 && coin(rng, st.per_channel_chance)) {
        for (double& p : params) p = uni(rng, st.lo, st.hi);
    } else {
        params[0] = params[1] = params[2] = uni(rng, st.lo, st.hi);
    }
    for (std::size_t i = 0; i < img.px.size(); ++i)
        img.px[i] = clamp01(fn(img.px[i], params[i % 3]));
}

void convolve_separable(ImageRGB& img, const std::vector<double>& kernel) {
    const int r = int(kernel.size()) / 2;
    ImageRGB tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double s = 0;
                for (int k = -r; k <= r; ++k) {
                    const int xx = std::clamp(x + k, 0, img.width - 1);
                    s += kernel[k + r] * img.at(xx, y, c);
                }
                tmp.at(x, y, c) = float(s);
            }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double s = 0;
                for (int k = -r; k <= r; ++k) {
                    const int yy = std::clamp(y + k, 0, img.height - 1);
                    s += kernel[k + r] * tmp.at(x, yy, c);
                }
                img.at(x, y, c) = clamp01(s);
            }
}

std::vector<double> gaussian_kernel(double sigma) {
    const int r = std::max(1, int(std::ceil(2.0 * sigma)));
    std::vector<double> k(2 * r + 1);
    double sum = 0;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + r];
    }
    for (double& v : k) v /= sum;
    return k;
}

void gaussian_blur(ImageRGB& img, Rng& rng, const AugmentationStep& st) {
    const double sigma = uni(rng, st.lo, st.hi);
    if (sigma < 1e-3) return;
    convolve_separable(img, gaussian_kernel(sigma));
}

int odd_kernel_size(Rng& rng, const AugmentationStep& st) {
    const int k = int(std::lround(uni(rng, st.lo, st.hi)));
    return std::clamp(k | 1, 3, 7);
}

void box_blur(ImageRGB& img, int k) {
    convolve_separable(img, std::vector<double>(k, 1.0 / k));
}

void median_blur(ImageRGB& img, int k) {
    const int r = k / 2;
    ImageRGB out(img.width, img.height);
    std::vector<float> window;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                window.clear();
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx)
                        window.push_back(img.at(std::clamp(x + dx, 0, img.width - 1),
                                                std::clamp(y + dy, 0, img.height - 1), c));
                std::nth_element(window.begin(), window.begin() + window.size() / 2, window.end());
                out.at(x, y, c) = window[window.size() / 2];
            }
    img = std::move(out);
}

/// Line kernel at a random angle.
void motion_blur(ImageRGB& img, int k, Rng& rng) {
    const double angle = uni(rng, 0.0, M_PI);
    const int r = k / 2;
    ImageRGB out(img.width, img.height);
    const double dx = std::cos(angle), dy = std::sin(angle);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double s = 0;
                for (int i = -r; i <= r; ++i) {
                    const int xx = std::clamp(x + int(std::lround(i * dx)), 0, img.width - 1);
                    const int yy = std::clamp(y + int(std::lround(i * dy)), 0, img.height - 1);
                    s += img.at(xx, yy, c);
                }
                out.at(x, y, c) = clamp01(s / k);
            }
    img = std::move(out);
}

void mixed_blur(ImageRGB& img, Rng& rng, const AugmentationStep& st) {
    const int which = int(std::uniform_int_distribution<int>(0, 2)(rng));
    const int k = odd_kernel_size(rng, st);
    if (which == 0)
        box_blur(img, k);
    else if (which == 1)
        median_blur(img, k);
    else
        motion_blur(img, k, rng);
}

/// Same sigma for the spatial and range terms.
void bilateral_blur(ImageRGB& img, Rng& rng, const AugmentationStep& st) {
    const double sigma = uni(rng, st.lo, st.hi);
    const int r = std::max(1, int(std::ceil(2.0 * sigma)));
    ImageRGB out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const double center = img.at(x, y, c);
                double s = 0, wsum = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const double v = img.at(std::clamp(x + dx, 0, img.width - 1),
                                                std::clamp(y + dy, 0, img.height - 1), c);
                        const double w =
                            std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma)) *
                            std::exp(-0.5 * (v - center) * (v - center) / (sigma * sigma));
                        s += w * v;
                        wsum += w;
                    }
                out.at(x, y, c) = clamp01(s / wsum);
            }
    img = std::move(out);
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    v = mx;
    const double d = mx - mn;
    s = mx > 0 ? d / mx : 0;
    if (d < 1e-12) {
        h = 0;
        return;
    }
    if (mx == r)
        h = 60.0 * std::fmod((g - b) / d, 6.0);
    else if (mx == g)
        h = 60.0 * ((b - r) / d + 2.0);
    else
        h = 60.0 * ((r - g) / d + 4.0);
    if (h < 0) h += 360.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double c = v * s;
    const double hp = h / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double rr = 0, gg = 0, bb = 0;
    if (hp < 1) { rr = c; gg = x; }
    else if (hp < 2) { rr = x; gg = c; }
    else if (hp < 3) { gg = c; bb = x; }
    else if (hp < 4) { gg = x; bb = c; }
    else if (hp < 5) { rr = x; bb = c; }
    else { rr = c; bb = x; }
    const double m = v - c;
    r = rr + m;
    g = gg + m;
    b = bb + m;
}

/// Shifts hue and saturation on an 8-bit-equivalent scale.
void hue_saturation(ImageRGB& img, Rng& rng, const AugmentationStep& st) {
    const double dh = uni(rng, st.lo, st.hi) * 360.0 / 255.0;
    const double ds = uni(rng, st.lo, st.hi) / 255.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double h, s, v;
            rgb_to_hsv(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2), h, s, v);
            h = std::fmod(h + dh + 360.0, 360.0);
            s = std::clamp(s + ds, 0.0, 1.0);
            double r, g, b;
            hsv_to_rgb(h, s, v, r, g, b);
            img.at(x, y, 0) = clamp01(r);
            img.at(x, y, 1) = clamp01(g);
            img.at(x, y, 2) = clamp01(b);
        }
}

void grayscale(ImageRGB& img, Rng& rng, const AugmentationStep& st) {
    const double alpha = uni(rng, st.lo, st.hi);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double lum =
                0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = clamp01((1.0 - alpha) * img.at(x, y, c) + alpha * lum);
        }
}

}  // namespace

ImageRGB augment(const ImageRGB& rgb, const AugmentationConfig& cfg, std::mt19937_64& rng) {
    ImageRGB img = rgb;

    enum Step {
        kGauss, kMixed, kBilateral, kHueSat, kGray, kAdd, kMul, kGamma, kSigmoid, kLog, kLinear,
        kCount
    };
    std::vector<int> order(kCount);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    for (int step : order) {
        switch (step) {
            case kGauss:
                if (coin(rng, cfg.gaussian_blur.chance)) gaussian_blur(img, rng, cfg.gaussian_blur);
                break;
            case kMixed:
                if (coin(rng, cfg.mixed_blur.chance)) mixed_blur(img, rng, cfg.mixed_blur);
                break;
            case kBilateral:
                if (coin(rng, cfg.bilateral_blur.chance))
                    bilateral_blur(img, rng, cfg.bilateral_blur);
                break;
            case kHueSat:
                if (coin(rng, cfg.hue_saturation.chance))
                    hue_saturation(img, rng, cfg.hue_saturation);
                break;
            case kGray:
                if (coin(rng, cfg.grayscale.chance)) grayscale(img, rng, cfg.grayscale);
                break;
            case kAdd:
                if (coin(rng, cfg.add.chance))
                    per_channel_map(img, cfg.add, rng, [](double v, double p) { return v + p; });
                break;
            case kMul:
                if (coin(rng, cfg.multiply.chance))
                    per_channel_map(img, cfg.multiply, rng,
                                    [](double v, double p) { return v * p; });
                break;
            case kGamma:
                if (coin(rng, cfg.gamma_contrast.chance))
                    per_channel_map(img, cfg.gamma_contrast, rng,
                                    [](double v, double p) { return std::pow(v, p); });
                break;
            case kSigmoid:
                if (coin(rng, cfg.sigmoid_contrast.chance))
                    per_channel_map(img, cfg.sigmoid_contrast, rng, [](double v, double p) {
                        return 1.0 / (1.0 + std::exp(p * (0.5 - v)));
                    });
                break;
            case kLog:
                if (coin(rng, cfg.log_contrast.chance))
                    per_channel_map(img, cfg.log_contrast, rng,
                                    [](double v, double p) { return p * std::log2(1.0 + v); });
                break;
            case kLinear:
                if (coin(rng, cfg.linear_contrast.chance))
                    per_channel_map(img, cfg.linear_contrast, rng,
                                    [](double v, double p) { return 0.5 + p * (v - 0.5); });
                break;
            default:
                break;
        }
    }
    return img;
}

}  // namespace poselab
