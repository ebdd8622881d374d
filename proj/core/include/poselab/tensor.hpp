#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

namespace poselab {

/// Dense N x C x H x W tensor node in a reverse-mode autodiff graph.
///
/// Values are stored row-major (w fastest). A node owns its backward
/// closure and shared pointers to its parents; backward() runs the
/// closures in reverse topological order. Parameter tensors are leaves
/// with requires_grad set; gradients accumulate into `grad`.
template <class T>
class Tensor : public std::enable_shared_from_this<Tensor<T>> {
public:
    using Ptr = std::shared_ptr<Tensor<T>>;

    std::array<int, 4> shape{0, 0, 0, 0};  // n, c, h, w
    std::vector<T> values;
    std::vector<T> grad;  // empty until gradients are needed
    bool requires_grad = false;

    std::vector<Ptr> parents;
    std::function<void()> backward_fn;

    Tensor() = default;
    Tensor(std::array<int, 4> s, bool req_grad = false)
        : shape(s), values(static_cast<std::size_t>(numel_of(s)), T(0)), requires_grad(req_grad) {}

    static Ptr create(std::array<int, 4> s, bool req_grad = false) {
        return std::make_shared<Tensor<T>>(s, req_grad);
    }
    static Ptr create(std::array<int, 4> s, std::vector<T> vals, bool req_grad = false) {
        auto t = std::make_shared<Tensor<T>>(s, req_grad);
        if (vals.size() != t->values.size())
            throw std::invalid_argument("tensor: value count " + std::to_string(vals.size()) +
                                        " does not match shape product " +
                                        std::to_string(t->values.size()));
        t->values = std::move(vals);
        return t;
    }

    static std::int64_t numel_of(const std::array<int, 4>& s) {
        return std::int64_t(s[0]) * s[1] * s[2] * s[3];
    }
    std::int64_t numel() const { return numel_of(shape); }

    int n() const { return shape[0]; }
    int c() const { return shape[1]; }
    int h() const { return shape[2]; }
    int w() const { return shape[3]; }

    T& at(int ni, int ci, int hi, int wi) {
        return values[((std::size_t(ni) * shape[1] + ci) * shape[2] + hi) * shape[3] + wi];
    }
    const T& at(int ni, int ci, int hi, int wi) const {
        return values[((std::size_t(ni) * shape[1] + ci) * shape[2] + hi) * shape[3] + wi];
    }

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), T(0));
    }
    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
    }

    /// Runs reverse-mode accumulation from this node. The node must be
    /// scalar (numel == 1); its gradient is seeded with 1.
    void backward() {
        if (numel() != 1)
            throw std::invalid_argument("backward: root tensor must be scalar, got numel " +
                                        std::to_string(numel()));
        std::vector<Tensor<T>*> order;
        std::unordered_set<Tensor<T>*> seen;
        topo(this, seen, order);
        ensure_grad();
        grad[0] = T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if ((*it)->backward_fn) (*it)->backward_fn();
        }
    }

private:
    static void topo(Tensor<T>* node, std::unordered_set<Tensor<T>*>& seen,
                     std::vector<Tensor<T>*>& order) {
        if (seen.count(node)) return;
        seen.insert(node);
        for (auto& p : node->parents) topo(p.get(), seen, order);
        order.push_back(node);
    }
};

template <class T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

namespace detail {

inline std::string shape_str(const std::array<int, 4>& s) {
    return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]) + "x" +
           std::to_string(s[3]);
}

}  // namespace detail

/// 2D convolution over NCHW input. Weight shape (out_ch, in_ch, kH, kW),
/// bias shape (out_ch,1,1,1). Output extents must divide exactly:
/// Ho = (H + 2*pad - kH)/stride + 1.
template <class T>
TensorPtr<T> conv2d(const TensorPtr<T>& x, const TensorPtr<T>& weight, const TensorPtr<T>& bias,
                    int stride, int pad) {
    const int N = x->n(), Cin = x->c(), H = x->h(), W = x->w();
    const int Cout = weight->shape[0], kC = weight->shape[1], kH = weight->shape[2],
              kW = weight->shape[3];
    if (kC != Cin)
        throw std::invalid_argument("conv2d: channel axis mismatch, input has " +
                                    std::to_string(Cin) + " channels but kernel expects " +
                                    std::to_string(kC));
    if (bias->numel() != Cout)
        throw std::invalid_argument("conv2d: bias axis mismatch, expected " +
                                    std::to_string(Cout) + " entries, got " +
                                    std::to_string(bias->numel()));
    if (stride <= 0 || pad < 0) throw std::invalid_argument("conv2d: invalid stride/padding");
    const int numH = H + 2 * pad - kH;
    const int numW = W + 2 * pad - kW;
    if (numH < 0 || numW < 0 || numH % stride != 0 || numW % stride != 0)
        throw std::invalid_argument("conv2d: spatial axis " + std::to_string(H) + "x" +
                                    std::to_string(W) + " not exactly covered by kernel " +
                                    std::to_string(kH) + "x" + std::to_string(kW) + " stride " +
                                    std::to_string(stride) + " pad " + std::to_string(pad));
    const int Ho = numH / stride + 1;
    const int Wo = numW / stride + 1;

    auto out = Tensor<T>::create({N, Cout, Ho, Wo});
    out->requires_grad = x->requires_grad || weight->requires_grad || bias->requires_grad;

    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const int K = Cin * kH * kW;
    const int S = Ho * Wo;

    auto im2col = [=](const T* img, Mat& col) {
        // col(K, S); row index (c*kH + kh)*kW + kw, column index ho*Wo + wo
        for (int c = 0; c < Cin; ++c) {
            const T* plane = img + std::size_t(c) * H * W;
            for (int kh = 0; kh < kH; ++kh) {
                for (int kw = 0; kw < kW; ++kw) {
                    const int r = (c * kH + kh) * kW + kw;
                    for (int ho = 0; ho < Ho; ++ho) {
                        const int hi = ho * stride + kh - pad;
                        T* dst = col.data() + r;  // row r, walk columns
                        if (hi < 0 || hi >= H) {
                            for (int wo = 0; wo < Wo; ++wo) col(r, ho * Wo + wo) = T(0);
                            continue;
                        }
                        const T* src = plane + std::size_t(hi) * W;
                        for (int wo = 0; wo < Wo; ++wo) {
                            const int wi = wo * stride + kw - pad;
                            col(r, ho * Wo + wo) = (wi >= 0 && wi < W) ? src[wi] : T(0);
                        }
                        (void)dst;
                    }
                }
            }
        }
    };

    Mat col(K, S);
    Eigen::Map<const RowMat> Wm(weight->values.data(), Cout, K);
    for (int ni = 0; ni < N; ++ni) {
        im2col(x->values.data() + std::size_t(ni) * Cin * H * W, col);
        Eigen::Map<RowMat> Om(out->values.data() + std::size_t(ni) * Cout * S, Cout, S);
        Om.noalias() = Wm * col;
        for (int c = 0; c < Cout; ++c) Om.row(c).array() += bias->values[c];
    }

    if (out->requires_grad) {
        out->parents = {x, weight, bias};
        std::weak_ptr<Tensor<T>> wout = out;
        auto xin = x;
        auto wt = weight;
        auto bt = bias;
        out->backward_fn = [=]() {
            auto o = wout.lock();
            if (!o) return;
            const T* gout = o->grad.data();
            if (wt->requires_grad) wt->ensure_grad();
            if (bt->requires_grad) bt->ensure_grad();
            if (xin->requires_grad) xin->ensure_grad();
            Mat col(K, S);
            Mat dcol(K, S);
            Eigen::Map<const RowMat> Wm(wt->values.data(), Cout, K);
            for (int ni = 0; ni < N; ++ni) {
                Eigen::Map<const RowMat> Gm(gout + std::size_t(ni) * Cout * S, Cout, S);
                if (wt->requires_grad) {
                    im2col(xin->values.data() + std::size_t(ni) * Cin * H * W, col);
                    Eigen::Map<RowMat> dWm(wt->grad.data(), Cout, K);
                    dWm.noalias() += Gm * col.transpose();
                }
                if (bt->requires_grad) {
                    for (int c = 0; c < Cout; ++c) bt->grad[c] += Gm.row(c).sum();
                }
                if (xin->requires_grad) {
                    dcol.noalias() = Wm.transpose() * Gm;
                    // col2im scatter-accumulate
                    T* gx = xin->grad.data() + std::size_t(ni) * Cin * H * W;
                    for (int c = 0; c < Cin; ++c) {
                        T* plane = gx + std::size_t(c) * H * W;
                        for (int kh = 0; kh < kH; ++kh) {
                            for (int kw = 0; kw < kW; ++kw) {
                                const int r = (c * kH + kh) * kW + kw;
                                for (int ho = 0; ho < Ho; ++ho) {
                                    const int hi = ho * stride + kh - pad;
                                    if (hi < 0 || hi >= H) continue;
                                    for (int wo = 0; wo < Wo; ++wo) {
                                        const int wi = wo * stride + kw - pad;
                                        if (wi < 0 || wi >= W) continue;
                                        plane[std::size_t(hi) * W + wi] += dcol(r, ho * Wo + wo);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        };
    }
    return out;
}

template <class T>
TensorPtr<T> relu(const TensorPtr<T>& x) {
    auto out = Tensor<T>::create(x->shape);
    out->requires_grad = x->requires_grad;
    for (std::size_t i = 0; i < x->values.size(); ++i)
        out->values[i] = x->values[i] > T(0) ? x->values[i] : T(0);
    if (out->requires_grad) {
        out->parents = {x};
        std::weak_ptr<Tensor<T>> wout = out;
        auto xin = x;
        out->backward_fn = [wout, xin]() {
            auto o = wout.lock();
            if (!o) return;
            xin->ensure_grad();
            for (std::size_t i = 0; i < xin->values.size(); ++i)
                if (xin->values[i] > T(0)) xin->grad[i] += o->grad[i];  // subgradient at 0 is 0
        };
    }
    return out;
}

template <class T>
TensorPtr<T> sigmoid(const TensorPtr<T>& x) {
    auto out = Tensor<T>::create(x->shape);
    out->requires_grad = x->requires_grad;
    for (std::size_t i = 0; i < x->values.size(); ++i)
        out->values[i] = T(1) / (T(1) + std::exp(-x->values[i]));
    if (out->requires_grad) {
        out->parents = {x};
        std::weak_ptr<Tensor<T>> wout = out;
        auto xin = x;
        out->backward_fn = [wout, xin]() {
            auto o = wout.lock();
            if (!o) return;
            xin->ensure_grad();
            for (std::size_t i = 0; i < xin->values.size(); ++i) {
                const T s = o->values[i];
                xin->grad[i] += o->grad[i] * s * (T(1) - s);
            }
        };
    }
    return out;
}

template <class T>
TensorPtr<T> add(const TensorPtr<T>& a, const TensorPtr<T>& b) {
    if (a->shape != b->shape)
        throw std::invalid_argument("add: shape mismatch " + detail::shape_str(a->shape) + " vs " +
                                    detail::shape_str(b->shape));
    auto out = Tensor<T>::create(a->shape);
    out->requires_grad = a->requires_grad || b->requires_grad;
    for (std::size_t i = 0; i < a->values.size(); ++i)
        out->values[i] = a->values[i] + b->values[i];
    if (out->requires_grad) {
        out->parents = {a, b};
        std::weak_ptr<Tensor<T>> wout = out;
        auto ain = a;
        auto bin = b;
        out->backward_fn = [wout, ain, bin]() {
            auto o = wout.lock();
            if (!o) return;
            if (ain->requires_grad) {
                ain->ensure_grad();
                for (std::size_t i = 0; i < ain->grad.size(); ++i) ain->grad[i] += o->grad[i];
            }
            if (bin->requires_grad) {
                bin->ensure_grad();
                for (std::size_t i = 0; i < bin->grad.size(); ++i) bin->grad[i] += o->grad[i];
            }
        };
    }
    return out;
}

/// Nearest-neighbor x2 upsampling.
template <class T>
TensorPtr<T> resize_up2(const TensorPtr<T>& x) {
    const int N = x->n(), C = x->c(), H = x->h(), W = x->w();
    auto out = Tensor<T>::create({N, C, 2 * H, 2 * W});
    out->requires_grad = x->requires_grad;
    for (int ni = 0; ni < N; ++ni)
        for (int ci = 0; ci < C; ++ci)
            for (int hi = 0; hi < 2 * H; ++hi)
                for (int wi = 0; wi < 2 * W; ++wi)
                    out->at(ni, ci, hi, wi) = x->at(ni, ci, hi / 2, wi / 2);
    if (out->requires_grad) {
        out->parents = {x};
        std::weak_ptr<Tensor<T>> wout = out;
        auto xin = x;
        out->backward_fn = [wout, xin, N, C, H, W]() {
            auto o = wout.lock();
            if (!o) return;
            xin->ensure_grad();
            for (int ni = 0; ni < N; ++ni)
                for (int ci = 0; ci < C; ++ci)
                    for (int hi = 0; hi < 2 * H; ++hi)
                        for (int wi = 0; wi < 2 * W; ++wi)
                            xin->grad[((std::size_t(ni) * C + ci) * H + hi / 2) * W + wi / 2] +=
                                o->grad[((std::size_t(ni) * C + ci) * 2 * H + hi) * 2 * W + wi];
        };
    }
    return out;
}

/// Nearest-neighbor x2 downsampling (keeps the top-left sample of each
/// 2x2 block). Requires even spatial extents.
template <class T>
TensorPtr<T> resize_down2(const TensorPtr<T>& x) {
    const int N = x->n(), C = x->c(), H = x->h(), W = x->w();
    if (H % 2 != 0 || W % 2 != 0)
        throw std::invalid_argument("resize_down2: odd spatial extents " + std::to_string(H) + "x" +
                                    std::to_string(W));
    auto out = Tensor<T>::create({N, C, H / 2, W / 2});
    out->requires_grad = x->requires_grad;
    for (int ni = 0; ni < N; ++ni)
        for (int ci = 0; ci < C; ++ci)
            for (int hi = 0; hi < H / 2; ++hi)
                for (int wi = 0; wi < W / 2; ++wi)
                    out->at(ni, ci, hi, wi) = x->at(ni, ci, 2 * hi, 2 * wi);
    if (out->requires_grad) {
        out->parents = {x};
        std::weak_ptr<Tensor<T>> wout = out;
        auto xin = x;
        out->backward_fn = [wout, xin, N, C, H, W]() {
            auto o = wout.lock();
            if (!o) return;
            xin->ensure_grad();
            for (int ni = 0; ni < N; ++ni)
                for (int ci = 0; ci < C; ++ci)
                    for (int hi = 0; hi < H / 2; ++hi)
                        for (int wi = 0; wi < W / 2; ++wi)
                            xin->grad[((std::size_t(ni) * C + ci) * H + 2 * hi) * W + 2 * wi] +=
                                o->grad[((std::size_t(ni) * C + ci) * (H / 2) + hi) * (W / 2) + wi];
        };
    }
    return out;
}

/// Builds a scalar graph node from explicit inputs, a precomputed value
/// and a closure that writes d(value)/d(input) into the inputs' grads
/// scaled by the incoming gradient. Used by the loss layers.
template <class T>
TensorPtr<T> make_scalar_node(std::vector<TensorPtr<T>> inputs, T value,
                              std::function<void(T upstream)> grad_writer) {
    auto out = Tensor<T>::create({1, 1, 1, 1});
    out->values[0] = value;
    for (auto& in : inputs)
        if (in->requires_grad) out->requires_grad = true;
    if (out->requires_grad) {
        out->parents = std::move(inputs);
        std::weak_ptr<Tensor<T>> wout = out;
        out->backward_fn = [wout, grad_writer]() {
            auto o = wout.lock();
            if (!o) return;
            grad_writer(o->grad[0]);
        };
    }
    return out;
}

}  // namespace poselab
