#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "poselab/tensor.hpp"

namespace poselab {

template <class T>
struct AdamConfig {
    T lr = T(1e-5);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

/// Adam optimizer over a fixed parameter list. Gradient buffers are left
/// untouched by step(); the training loop zeroes them.
template <class T>
class Adam {
public:
    Adam(std::vector<TensorPtr<T>> params, AdamConfig<T> cfg = {})
        : params_(std::move(params)), cfg_(cfg) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i]->values.size(), T(0));
            v_[i].assign(params_[i]->values.size(), T(0));
        }
    }

    void set_lr(T lr) { cfg_.lr = lr; }
    T lr() const { return cfg_.lr; }
    std::int64_t step_count() const { return step_; }

    void step() {
        ++step_;
        const T bc1 = T(1) - std::pow(cfg_.beta1, T(step_));
        const T bc2 = T(1) - std::pow(cfg_.beta2, T(step_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i];
            if (p.grad.size() != p.values.size())
                throw std::runtime_error("adam: parameter " + std::to_string(i) +
                                         " has no gradient buffer");
            for (std::size_t j = 0; j < p.values.size(); ++j) {
                const T g = p.grad[j];
                m_[i][j] = cfg_.beta1 * m_[i][j] + (T(1) - cfg_.beta1) * g;
                v_[i][j] = cfg_.beta2 * v_[i][j] + (T(1) - cfg_.beta2) * g * g;
                const T mhat = m_[i][j] / bc1;
                const T vhat = v_[i][j] / bc2;
                p.values[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

private:
    std::vector<TensorPtr<T>> params_;
    AdamConfig<T> cfg_;
    std::vector<std::vector<T>> m_, v_;
    std::int64_t step_ = 0;
};

}  // namespace poselab
