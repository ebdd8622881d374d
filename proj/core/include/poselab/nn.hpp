#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "poselab/tensor.hpp"

namespace poselab {

/// Named parameter set, shared by checkpointing and the optimizer.
/// Iteration order is the registration order.
template <class T>
class ParamRegistry {
public:
    void add(const std::string& name, TensorPtr<T> p) {
        if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
        index_[name] = entries_.size();
        entries_.push_back({name, std::move(p)});
    }
    TensorPtr<T> find(const std::string& name) const {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : entries_[it->second].tensor;
    }
    std::vector<TensorPtr<T>> tensors() const {
        std::vector<TensorPtr<T>> out;
        out.reserve(entries_.size());
        for (auto& e : entries_) out.push_back(e.tensor);
        return out;
    }
    struct Entry {
        std::string name;
        TensorPtr<T> tensor;
    };
    const std::vector<Entry>& entries() const { return entries_; }

    std::int64_t total_params() const {
        std::int64_t n = 0;
        for (auto& e : entries_) n += e.tensor->numel();
        return n;
    }

    void zero_grads() {
        for (auto& e : entries_) e.tensor->zero_grad();
    }

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

/// One convolution layer: He-normal weight init, zero bias.
template <class T>
struct ConvLayer {
    TensorPtr<T> weight;
    TensorPtr<T> bias;
    int stride = 1;
    int pad = 0;

    ConvLayer() = default;
    ConvLayer(int out_ch, int in_ch, int k, int stride_, std::mt19937_64& rng, int pad_ = -1)
        : stride(stride_), pad(pad_ < 0 ? k / 2 : pad_) {
        weight = Tensor<T>::create({out_ch, in_ch, k, k}, true);
        bias = Tensor<T>::create({out_ch, 1, 1, 1}, true);
        const double stddev = std::sqrt(2.0 / (double(in_ch) * k * k));
        std::normal_distribution<double> dist(0.0, stddev);
        for (auto& v : weight->values) v = T(dist(rng));
    }

    TensorPtr<T> forward(const TensorPtr<T>& x) const {
        return conv2d(x, weight, bias, stride, pad);
    }

    void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
        reg.add(prefix + ".weight", weight);
        reg.add(prefix + ".bias", bias);
    }

    std::int64_t param_count() const { return weight->numel() + bias->numel(); }
};

}  // namespace poselab
