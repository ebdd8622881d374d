#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "poselab/adam.hpp"
#include "poselab/gradcheck.hpp"
#include "poselab/tensor.hpp"

using namespace poselab;

namespace {

TensorPtr<double> randn(std::array<int, 4> shape, std::mt19937_64& rng, bool req_grad = true) {
    auto t = Tensor<double>::create(shape, req_grad);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (auto& v : t->values) v = nd(rng);
    return t;
}

TensorPtr<double> sum_to_scalar(const TensorPtr<double>& y) {
    double s = 0;
    for (double v : y->values) s += v;
    return make_scalar_node<double>({y}, s, [y](double up) {
        y->ensure_grad();
        for (auto& g : y->grad) g += up;
    });
}

// weighted sum keeps the gradient non-uniform so symmetric-op bugs show
TensorPtr<double> weighted_sum(const TensorPtr<double>& y) {
    double s = 0;
    for (std::size_t i = 0; i < y->values.size(); ++i) s += double(i % 7 + 1) * y->values[i];
    return make_scalar_node<double>({y}, s, [y](double up) {
        y->ensure_grad();
        for (std::size_t i = 0; i < y->grad.size(); ++i) y->grad[i] += up * double(i % 7 + 1);
    });
}

}  // namespace

TEST_CASE("conv2d all-ones 4x4 with all-ones 3x3 kernel") {
    auto x = Tensor<float>::create({1, 1, 4, 4}, std::vector<float>(16, 1.f));
    auto w = Tensor<float>::create({1, 1, 3, 3}, std::vector<float>(9, 1.f));
    auto b = Tensor<float>::create({1, 1, 1, 1});
    auto y = conv2d(x, w, b, 1, 1);
    CHECK(y->shape == std::array<int, 4>{1, 1, 4, 4});
    CHECK(y->at(0, 0, 1, 1) == doctest::Approx(9.0));
    CHECK(y->at(0, 0, 2, 2) == doctest::Approx(9.0));
    CHECK(y->at(0, 0, 0, 0) == doctest::Approx(4.0));  // corner support
}

TEST_CASE("conv2d identity kernel preserves the input") {
    std::mt19937_64 rng(1);
    auto x = randn({2, 3, 5, 5}, rng, false);
    auto w = Tensor<float>::create({3, 3, 3, 3});
    for (int c = 0; c < 3; ++c) w->at(c, c, 1, 1) = 1.f;  // delta at kernel center
    auto b = Tensor<float>::create({3, 1, 1, 1});
    auto xf = Tensor<float>::create(x->shape);
    for (std::size_t i = 0; i < x->values.size(); ++i) xf->values[i] = float(x->values[i]);
    auto y = conv2d(xf, w, b, 1, 1);
    for (std::size_t i = 0; i < y->values.size(); ++i)
        CHECK(y->values[i] == doctest::Approx(xf->values[i]));
}

TEST_CASE("conv2d shape errors name the offending axis") {
    auto x = Tensor<float>::create({1, 2, 4, 4});
    auto w = Tensor<float>::create({1, 3, 3, 3});
    auto b = Tensor<float>::create({1, 1, 1, 1});
    CHECK_THROWS_WITH_AS(conv2d(x, w, b, 1, 1), doctest::Contains("channel"),
                         std::invalid_argument);

    auto w2 = Tensor<float>::create({2, 2, 3, 3});
    auto b_bad = Tensor<float>::create({1, 1, 1, 1});
    CHECK_THROWS_WITH_AS(conv2d(x, w2, b_bad, 1, 1), doctest::Contains("bias"),
                         std::invalid_argument);

    // (6 + 2 - 3) = 5 is not divisible by stride 2
    auto x6 = Tensor<float>::create({1, 2, 6, 6});
    auto b2 = Tensor<float>::create({2, 1, 1, 1});
    CHECK_THROWS_WITH_AS(conv2d(x6, w2, b2, 2, 1), doctest::Contains("spatial"),
                         std::invalid_argument);
}

TEST_CASE("elementwise op examples") {
    auto x = Tensor<float>::create({1, 1, 1, 2}, {-1.f, 2.f});
    auto r = relu(x);
    CHECK(r->values[0] == 0.f);
    CHECK(r->values[1] == 2.f);

    auto z = Tensor<float>::create({1, 1, 1, 1}, std::vector<float>{0.f});
    CHECK(sigmoid(z)->values[0] == doctest::Approx(0.5));

    auto zeros = Tensor<float>::create(x->shape);
    auto s = add(x, zeros);
    CHECK(s->values[0] == x->values[0]);
    CHECK(s->values[1] == x->values[1]);

    auto bad = Tensor<float>::create({1, 1, 2, 2});
    CHECK_THROWS_AS(add(x, bad), std::invalid_argument);
}

TEST_CASE("resize examples") {
    auto x = Tensor<float>::create({1, 1, 2, 2}, {1.f, 2.f, 3.f, 4.f});
    auto up = resize_up2(x);
    CHECK(up->shape == std::array<int, 4>{1, 1, 4, 4});
    CHECK(up->at(0, 0, 0, 0) == 1.f);
    CHECK(up->at(0, 0, 0, 1) == 1.f);
    CHECK(up->at(0, 0, 1, 1) == 1.f);
    CHECK(up->at(0, 0, 0, 2) == 2.f);
    CHECK(up->at(0, 0, 3, 3) == 4.f);

    auto back = resize_down2(up);
    for (int i = 0; i < 4; ++i) CHECK(back->values[i] == x->values[i]);

    auto odd = Tensor<float>::create({1, 1, 3, 4});
    CHECK_THROWS_AS(resize_down2(odd), std::invalid_argument);
}

TEST_CASE("backward requires a scalar root") {
    auto x = Tensor<float>::create({1, 1, 2, 2}, true);
    CHECK_THROWS_AS(x->backward(), std::invalid_argument);
}

TEST_CASE("finite-difference gradient checks for every differentiable op") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        SUBCASE("conv2d") {}
        auto x = randn({2, 3, 8, 8}, rng);
        auto w = randn({5, 3, 3, 3}, rng);
        auto b = randn({5, 1, 1, 1}, rng);
        const double err = finite_diff_max_rel_error(
            {x, w, b}, [&] { return weighted_sum(conv2d(x, w, b, 1, 1)); }, 1e-4, 12, trial);
        CHECK(err < 1e-4);
    }
    for (int trial = 0; trial < 20; ++trial) {
        auto x = randn({1, 2, 4, 4}, rng);
        const double err = finite_diff_max_rel_error(
            {x}, [&] { return weighted_sum(relu(x)); }, 1e-4, 12, trial);
        CHECK(err < 1e-3);  // relu kink: random values stay away from 0 w.h.p.
    }
    for (int trial = 0; trial < 20; ++trial) {
        auto x = randn({1, 2, 4, 4}, rng);
        const double err = finite_diff_max_rel_error(
            {x}, [&] { return weighted_sum(sigmoid(x)); }, 1e-4, 12, trial);
        CHECK(err < 1e-4);
    }
    for (int trial = 0; trial < 20; ++trial) {
        auto a = randn({1, 2, 4, 4}, rng);
        auto b = randn({1, 2, 4, 4}, rng);
        const double err = finite_diff_max_rel_error(
            {a, b}, [&] { return weighted_sum(add(a, b)); }, 1e-4, 12, trial);
        CHECK(err < 1e-4);
    }
    for (int trial = 0; trial < 20; ++trial) {
        auto x = randn({1, 2, 4, 4}, rng);
        const double err = finite_diff_max_rel_error(
            {x}, [&] { return weighted_sum(resize_up2(x)); }, 1e-4, 12, trial);
        CHECK(err < 1e-4);
    }
    for (int trial = 0; trial < 20; ++trial) {
        auto x = randn({1, 2, 4, 4}, rng);
        const double err = finite_diff_max_rel_error(
            {x}, [&] { return weighted_sum(resize_down2(x)); }, 1e-4, 12, trial);
        CHECK(err < 1e-4);
    }
    // composite graph
    for (int trial = 0; trial < 20; ++trial) {
        auto x = randn({1, 2, 6, 6}, rng);
        auto w = randn({2, 2, 3, 3}, rng);
        auto b = randn({2, 1, 1, 1}, rng);
        auto build = [&] {
            auto y = relu(conv2d(x, w, b, 1, 1));
            return weighted_sum(resize_down2(add(y, sigmoid(resize_up2(resize_down2(y))))));
        };
        const double err = finite_diff_max_rel_error({x, w, b}, build, 1e-4, 12, trial);
        CHECK(err < 1e-3);
    }
}

TEST_CASE("adam step semantics") {
    auto p = Tensor<float>::create({1, 1, 1, 1}, {1.f}, true);
    AdamConfig<float> cfg;
    cfg.lr = 1e-5f;
    Adam<float> opt({p}, cfg);

    SUBCASE("missing gradient buffer is an error") { CHECK_THROWS_AS(opt.step(), std::runtime_error); }

    SUBCASE("zero gradient leaves the parameter unchanged") {
        p->ensure_grad();
        opt.step();
        CHECK(p->values[0] == doctest::Approx(1.f));
    }

    SUBCASE("constant unit gradient moves by about lr on the first step") {
        p->ensure_grad();
        p->grad[0] = 1.f;
        opt.step();
        CHECK(p->values[0] == doctest::Approx(1.f - 1e-5f).epsilon(1e-3));
    }

    SUBCASE("identical parameters receive identical updates") {
        auto q = Tensor<float>::create({1, 1, 1, 1}, {1.f}, true);
        Adam<float> opt2({p, q}, cfg);
        p->ensure_grad();
        q->ensure_grad();
        p->grad[0] = q->grad[0] = 0.37f;
        opt2.step();
        CHECK(p->values[0] == q->values[0]);
    }
}

TEST_CASE("forward passes are deterministic") {
    std::mt19937_64 rng(3);
    auto x = randn({1, 3, 8, 8}, rng, false);
    auto w = randn({4, 3, 3, 3}, rng, false);
    auto b = randn({4, 1, 1, 1}, rng, false);
    auto y1 = conv2d(x, w, b, 1, 1);
    auto y2 = conv2d(x, w, b, 1, 1);
    CHECK(y1->values == y2->values);
}
