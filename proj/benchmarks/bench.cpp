#include <benchmark/benchmark.h>

#include <random>

#include "poselab/geometry.hpp"
#include "poselab/tensor.hpp"

using namespace poselab;

namespace {

TensorPtr<float> random_tensor(std::array<int, 4> shape, std::mt19937_64& rng) {
    auto t = Tensor<float>::create(shape);
    std::normal_distribution<float> nd(0.f, 1.f);
    for (auto& v : t->values) v = nd(rng);
    return t;
}

void bm_conv2d_forward(benchmark::State& state) {
    std::mt19937_64 rng(1);
    auto x = random_tensor({1, 32, 64, 64}, rng);
    auto w = random_tensor({32, 32, 3, 3}, rng);
    auto b = random_tensor({32, 1, 1, 1}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, 1, 1));
}
BENCHMARK(bm_conv2d_forward);

void bm_ransac_pnp(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const Intrinsics K{500, 500, 320, 240};
    Pose gt;
    gt.R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
    gt.t = {20, -30, 900};
    std::vector<Correspondence> corrs;
    for (int i = 0; i < 24; ++i) {
        const Eigen::Vector3d p(uni(rng) * 80, uni(rng) * 80, uni(rng) * 80);
        corrs.push_back({project_point(p, gt, K), p});
    }
    for (int i = 0; i < 7; ++i) corrs[i * 3].uv = {uni(rng) * 320 + 320, uni(rng) * 240 + 240};
    RansacConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(ransac_pnp(corrs, K, cfg));
}
BENCHMARK(bm_ransac_pnp);

void bm_icp_refine(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-50.0, 50.0);
    PointCloud model;
    for (int i = 0; i < 400; ++i) model.push_back({uni(rng), uni(rng), uni(rng)});
    Pose gt;
    gt.R = Eigen::AngleAxisd(0.4, Eigen::Vector3d(3, 1, 2).normalized()).toRotationMatrix();
    gt.t = {10, 5, 850};
    PointCloud scene;
    for (const auto& p : model) scene.push_back(gt.apply(p));
    Pose init = gt;
    init.R = Eigen::AngleAxisd(5.0 * M_PI / 180.0, Eigen::Vector3d::UnitY()) * gt.R;
    init.t += Eigen::Vector3d(5, -5, 5);
    for (auto _ : state) benchmark::DoNotOptimize(icp_refine(model, scene, init));
}
BENCHMARK(bm_icp_refine);

}  // namespace

BENCHMARK_MAIN();
