#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "poselab/tensor.hpp"

namespace poselab {

/// Central-difference gradient check in double precision. build_loss
/// reconstructs the scalar loss graph from the current parameter
/// values. Up to max_elems randomly chosen elements per parameter are
/// checked; returns the maximum relative error
/// |fd - analytic| / max(1, |fd|, |analytic|).
inline double finite_diff_max_rel_error(const std::vector<TensorPtr<double>>& params,
                                        const std::function<TensorPtr<double>()>& build_loss,
                                        double step = 1e-4, int max_elems = 25,
                                        std::uint64_t seed = 0) {
    for (auto& p : params) p->zero_grad();
    auto loss = build_loss();
    loss->backward();
    std::vector<std::vector<double>> analytic(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i]->ensure_grad();
        analytic[i] = params[i]->grad;
    }

    std::mt19937_64 rng(seed);
    double worst = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& vals = params[i]->values;
        std::vector<std::size_t> idx(vals.size());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
        if (int(idx.size()) > max_elems) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(max_elems);
        }
        for (std::size_t k : idx) {
            const double orig = vals[k];
            vals[k] = orig + step;
            const double lp = build_loss()->values[0];
            vals[k] = orig - step;
            const double lm = build_loss()->values[0];
            vals[k] = orig;
            const double fd = (lp - lm) / (2.0 * step);
            const double g = analytic[i][k];
            const double err = std::abs(fd - g) / std::max({1.0, std::abs(fd), std::abs(g)});
            worst = std::max(worst, err);
        }
    }
    for (auto& p : params) p->zero_grad();
    return worst;
}

}  // namespace poselab
