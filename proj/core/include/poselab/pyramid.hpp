#pragma once

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "poselab/backbone.hpp"
#include "poselab/nn.hpp"
#include "poselab/tensor.hpp"

namespace poselab {

enum class AggregationMode { PFPN, FPN, None };

inline std::string to_string(AggregationMode m) {
    switch (m) {
        case AggregationMode::PFPN: return "pfpn";
        case AggregationMode::FPN: return "fpn";
        case AggregationMode::None: return "none";
    }
    return "?";
}

inline AggregationMode aggregation_from_string(const std::string& s) {
    if (s == "pfpn") return AggregationMode::PFPN;
    if (s == "fpn") return AggregationMode::FPN;
    if (s == "none") return AggregationMode::None;
    throw std::invalid_argument("unknown aggregation mode: " + s);
}

struct PyramidConfig {
    int width = 256;
    AggregationMode mode = AggregationMode::PFPN;
};

template <class T>
struct FeaturePyramid {
    TensorPtr<T> p3, p4, p5;  // strides 8, 16, 32
};

/// One node of the aggregation graph as reported by summary(): its name,
/// input names, and trainable parameter count. Add nodes list exactly
/// the two inputs they sum.
struct PyramidNodeDesc {
    std::string name;
    std::vector<std::string> inputs;
    std::int64_t params = 0;
};

/// Multi-scale feature aggregator with three interchangeable modes.
///
/// pfpn: fixed graph where every interior node sums two stride-aligned
/// inputs and applies a 3x3 conv + ReLU. Laterals are 1x1 projections.
///   T4 = node(L4, up2(L5))
///   T3 = node(L3, up2(T4))
///   P3 = node(T3, L3)            skip
///   B4 = node(T4, down2(P3))     carries C3 information upward
///   P4 = node(B4, L4)            skip
///   P5 = node(L5, down2(P4))     cross connection over all levels
/// fpn: classic top-down pathway with 3x3 smoothing.
/// none: independent 1x1 projections, no cross-scale flow.
template <class T>
class PyramidAggregator {
public:
    PyramidAggregator(const PyramidConfig& cfg, const BackboneConfig& backbone,
                      std::mt19937_64& rng)
        : cfg_(cfg) {
        const int W = cfg.width;
        const auto& cw = backbone.stage_widths;
        switch (cfg.mode) {
            case AggregationMode::PFPN:
                lat_ = {ConvLayer<T>(W, cw[0], 1, 1, rng), ConvLayer<T>(W, cw[1], 1, 1, rng),
                        ConvLayer<T>(W, cw[2], 1, 1, rng)};
                for (int i = 0; i < 6; ++i) nodes_.emplace_back(W, W, 3, 1, rng);
                break;
            case AggregationMode::FPN:
                lat_ = {ConvLayer<T>(W, cw[0], 1, 1, rng), ConvLayer<T>(W, cw[1], 1, 1, rng),
                        ConvLayer<T>(W, cw[2], 1, 1, rng)};
                for (int i = 0; i < 3; ++i) nodes_.emplace_back(W, W, 3, 1, rng);
                break;
            case AggregationMode::None:
                lat_ = {ConvLayer<T>(W, cw[0], 1, 1, rng), ConvLayer<T>(W, cw[1], 1, 1, rng),
                        ConvLayer<T>(W, cw[2], 1, 1, rng)};
                break;
        }
    }

    FeaturePyramid<T> forward(const BackboneFeatures<T>& f) const {
        check_strides(f);
        FeaturePyramid<T> out;
        switch (cfg_.mode) {
            case AggregationMode::PFPN: {
                auto l3 = lat_[0].forward(f.c3);
                auto l4 = lat_[1].forward(f.c4);
                auto l5 = lat_[2].forward(f.c5);
                auto t4 = node(0, l4, resize_up2(l5));
                auto t3 = node(1, l3, resize_up2(t4));
                out.p3 = node(2, t3, l3);
                auto b4 = node(3, t4, resize_down2(out.p3));
                out.p4 = node(4, b4, l4);
                out.p5 = node(5, l5, resize_down2(out.p4));
                break;
            }
            case AggregationMode::FPN: {
                auto m5 = lat_[2].forward(f.c5);
                auto m4 = add(lat_[1].forward(f.c4), resize_up2(m5));
                auto m3 = add(lat_[0].forward(f.c3), resize_up2(m4));
                out.p3 = relu(nodes_[0].forward(m3));
                out.p4 = relu(nodes_[1].forward(m4));
                out.p5 = relu(nodes_[2].forward(m5));
                break;
            }
            case AggregationMode::None: {
                out.p3 = lat_[0].forward(f.c3);
                out.p4 = lat_[1].forward(f.c4);
                out.p5 = lat_[2].forward(f.c5);
                break;
            }
        }
        return out;
    }

    /// Graph description used by the model summary and the topology
    /// audit. Names: C*, L* laterals, interior add nodes, P* outputs.
    std::vector<PyramidNodeDesc> graph() const {
        std::vector<PyramidNodeDesc> g;
        auto lp = [&](int i) { return lat_[i].param_count(); };
        switch (cfg_.mode) {
            case AggregationMode::PFPN: {
                g.push_back({"L3", {"C3"}, lp(0)});
                g.push_back({"L4", {"C4"}, lp(1)});
                g.push_back({"L5", {"C5"}, lp(2)});
                g.push_back({"T4", {"L4", "L5"}, nodes_[0].param_count()});
                g.push_back({"T3", {"L3", "T4"}, nodes_[1].param_count()});
                g.push_back({"P3", {"T3", "L3"}, nodes_[2].param_count()});
                g.push_back({"B4", {"T4", "P3"}, nodes_[3].param_count()});
                g.push_back({"P4", {"B4", "L4"}, nodes_[4].param_count()});
                g.push_back({"P5", {"L5", "P4"}, nodes_[5].param_count()});
                break;
            }
            case AggregationMode::FPN: {
                g.push_back({"L3", {"C3"}, lp(0)});
                g.push_back({"L4", {"C4"}, lp(1)});
                g.push_back({"L5", {"C5"}, lp(2)});
                g.push_back({"M4", {"L4", "L5"}, 0});
                g.push_back({"M3", {"L3", "M4"}, 0});
                g.push_back({"P3", {"M3"}, nodes_[0].param_count()});
                g.push_back({"P4", {"M4"}, nodes_[1].param_count()});
                g.push_back({"P5", {"L5"}, nodes_[2].param_count()});
                break;
            }
            case AggregationMode::None: {
                g.push_back({"P3", {"C3"}, lp(0)});
                g.push_back({"P4", {"C4"}, lp(1)});
                g.push_back({"P5", {"C5"}, lp(2)});
                break;
            }
        }
        return g;
    }

    std::string summary() const {
        std::ostringstream os;
        os << "aggregation mode: " << to_string(cfg_.mode) << " width " << cfg_.width << "\n";
        std::int64_t total = 0;
        for (const auto& n : graph()) {
            os << n.name << " <- ";
            for (std::size_t i = 0; i < n.inputs.size(); ++i)
                os << (i ? ", " : "") << n.inputs[i];
            os << "  params " << n.params << "\n";
            total += n.params;
        }
        os << "total aggregator params " << total << "\n";
        return os.str();
    }

    void register_params(ParamRegistry<T>& reg, const std::string& prefix) const {
        for (std::size_t i = 0; i < lat_.size(); ++i)
            lat_[i].register_params(reg, prefix + ".lat" + std::to_string(i + 3));
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            nodes_[i].register_params(reg, prefix + ".node" + std::to_string(i));
    }

    const PyramidConfig& config() const { return cfg_; }

private:
    TensorPtr<T> node(int idx, const TensorPtr<T>& a, const TensorPtr<T>& b) const {
        return relu(nodes_[idx].forward(add(a, b)));
    }

    void check_strides(const BackboneFeatures<T>& f) const {
        if (f.c3->h() != 2 * f.c4->h() || f.c4->h() != 2 * f.c5->h() ||
            f.c3->w() != 2 * f.c4->w() || f.c4->w() != 2 * f.c5->w())
            throw std::invalid_argument("pyramid: backbone maps are not stride-consistent");
    }

    PyramidConfig cfg_;
    std::vector<ConvLayer<T>> lat_;
    std::vector<ConvLayer<T>> nodes_;
};

}  // namespace poselab
