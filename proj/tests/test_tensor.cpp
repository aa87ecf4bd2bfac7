#include <doctest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "hdrseq/imaging.hpp"
#include "hdrseq/tensor.hpp"
#include "hdrseq/wavelet.hpp"

using namespace hdrseq;
using hdrseq::testing::check_gradients;
using hdrseq::testing::random_tensor;

namespace {

// Projects an output onto fixed random weights so every element contributes.
Tensor probe(const Tensor& y, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return ops::sum(ops::mul(y, random_tensor(y.shape(), rng)));
}

double naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, int k, int stride, int pad, int co, int oy,
                  int ox) {
    const Shape s = x.shape();
    double acc = b.defined() ? b.values()[co] : 0.0;
    for (int ci = 0; ci < s.c; ++ci) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || ix < 0 || iy >= s.h || ix >= s.w) continue;
                acc += w.values()[co * s.c * k * k + (ci * k + ky) * k + kx] * x.values()[(ci * s.h + iy) * s.w + ix];
            }
        }
    }
    return acc;
}

}  // namespace

TEST_CASE("elementwise forward values") {
    auto a = Tensor::from({1, 1, 3}, {-2.0, 0.5, 3.0});
    auto b = Tensor::from({1, 1, 3}, {1.0, 2.0, -1.0});
    CHECK(ops::add(a, b).values()[2] == 2.0);
    CHECK(ops::sub(a, b).values()[0] == -3.0);
    CHECK(ops::mul(a, b).values()[1] == 1.0);
    CHECK(ops::leaky_relu(a).values()[0] == doctest::Approx(-0.2));
    CHECK(ops::sigmoid(a).values()[1] == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))));
    CHECK(ops::softplus(a).values()[2] == doctest::Approx(std::log1p(std::exp(3.0))));
    CHECK(ops::relu_square(a).values()[0] == 0.0);
    CHECK(ops::relu_square(a).values()[2] == 9.0);
    CHECK(ops::clamp_min_zero(a).values()[0] == 0.0);
    CHECK(ops::mean_abs(a).item() == doctest::Approx(5.5 / 3.0));
    CHECK(ops::softplus(Tensor::scalar(800.0)).item() == doctest::Approx(800.0));
    CHECK(std::isfinite(ops::sigmoid(Tensor::scalar(-800.0)).item()));
    CHECK_THROWS_AS(ops::add(a, Tensor::zeros({1, 1, 2})), ShapeError);
}

TEST_CASE("tensor tone_map agrees with the scalar operator") {
    auto x = Tensor::from({1, 2, 2}, {0.0, 0.25, 1.0, 4.0});
    auto y = ops::tone_map(x, 5000.0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(y.values()[i] == doctest::Approx(tone_map(x.values()[i], ToneMapParams{})));
    CHECK_THROWS_AS(ops::tone_map(Tensor::full({1, 1, 1}, -0.1), 5000.0), DomainError);
}

TEST_CASE("conv2d matches direct summation") {
    std::mt19937_64 rng(1);
    for (int stride : {1, 2}) {
        for (int k : {1, 3}) {
            auto x = random_tensor({3, 7, 6}, rng);
            auto w = random_tensor({4, 3 * k * k, 1}, rng);
            auto b = random_tensor({4, 1, 1}, rng);
            auto y = ops::conv2d(x, w, b, k, stride, k / 2);
            const Shape s = y.shape();
            CHECK(s.c == 4);
            CHECK(s.h == (7 + 2 * (k / 2) - k) / stride + 1);
            for (int co = 0; co < s.c; ++co) {
                for (int oy = 0; oy < s.h; ++oy) {
                    for (int ox = 0; ox < s.w; ++ox) {
                        CHECK(y.values()[(co * s.h + oy) * s.w + ox] ==
                              doctest::Approx(naive_conv(x, w, b, k, stride, k / 2, co, oy, ox)).epsilon(1e-12));
                    }
                }
            }
        }
    }
}

TEST_CASE("dwt op matches the grid transform and idwt inverts it") {
    std::mt19937_64 rng(2);
    auto x = random_tensor({2, 6, 4}, rng);
    auto y = ops::dwt(x);
    CHECK(y.shape() == Shape{8, 3, 2});
    auto s = dwt_haar(x.to_grid());
    for (std::size_t i = 0; i < s.ll.size(); ++i) {
        CHECK(y.values()[i] == doctest::Approx(s.ll.data[i]));
        CHECK(y.values()[s.ll.size() + i] == doctest::Approx(s.lh.data[i]));
        CHECK(y.values()[3 * s.ll.size() + i] == doctest::Approx(s.hh.data[i]));
    }
    auto back = ops::idwt(y);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(back.values()[i] == doctest::Approx(x.values()[i]));
}

TEST_CASE("layer norm output has zero mean and unit variance per pixel") {
    std::mt19937_64 rng(3);
    auto x = random_tensor({5, 2, 3}, rng, -4, 4);
    auto y = ops::layer_norm_channels(x, Tensor::full({5, 1, 1}, 1.0), Tensor::zeros({5, 1, 1}), 0.0);
    for (int p = 0; p < 6; ++p) {
        double m = 0, v = 0;
        for (int c = 0; c < 5; ++c) m += y.values()[c * 6 + p];
        for (int c = 0; c < 5; ++c) v += std::pow(y.values()[c * 6 + p] - m / 5, 2);
        CHECK(std::fabs(m / 5) < 1e-12);
        CHECK(v / 5 == doctest::Approx(1.0));
    }
}

TEST_CASE("gradients of every operation") {
    std::mt19937_64 rng(4);
    const Shape s{3, 4, 6};
    auto x = random_tensor(s, rng, -1, 1, true);
    auto y = random_tensor(s, rng, -1, 1, true);
    auto pos = random_tensor(s, rng, 0.05, 2.0, true);
    auto cv = random_tensor({3, 1, 1}, rng, -1, 1, true);
    auto mu = random_tensor({3, 1, 1}, rng, 0, 1, true);
    auto w3 = random_tensor({2, 27, 1}, rng, -1, 1, true);
    auto b3 = random_tensor({2, 1, 1}, rng, -1, 1, true);

    struct Case {
        const char* name;
        std::function<Tensor()> f;
        std::vector<Tensor> leaves;
    };
    const std::vector<Case> cases = {
        {"add", [&] { return probe(ops::add(x, y), 1); }, {x, y}},
        {"sub", [&] { return probe(ops::sub(x, y), 2); }, {x, y}},
        {"mul", [&] { return probe(ops::mul(x, y), 3); }, {x, y}},
        {"scale", [&] { return probe(ops::add_scalar(ops::scale(x, -1.7), 0.3), 4); }, {x}},
        {"mul_channel", [&] { return probe(ops::mul_channel(x, cv), 5); }, {x, cv}},
        {"add_channel", [&] { return probe(ops::add_channel(x, cv), 6); }, {x, cv}},
        {"token_mix", [&] { return probe(ops::token_mix(x, y, mu), 7); }, {x, y, mu}},
        {"leaky_relu", [&] { return probe(ops::leaky_relu(x), 8); }, {x}},
        {"sigmoid", [&] { return probe(ops::sigmoid(x), 9); }, {x}},
        {"softplus", [&] { return probe(ops::softplus(x), 10); }, {x}},
        {"relu_square", [&] { return probe(ops::relu_square(x), 11); }, {x}},
        {"clamp", [&] { return probe(ops::clamp_min_zero(x), 12); }, {x}},
        {"abs", [&] { return probe(ops::abs(x), 13); }, {x}},
        {"tone_map", [&] { return probe(ops::tone_map(pos, 5000.0), 14); }, {pos}},
        {"concat/slice",
         [&] { return probe(ops::slice_channels(ops::concat({x, y}), 2, 3), 15); },
         {x, y}},
        {"conv s1", [&] { return probe(ops::conv2d(x, w3, b3, 3, 1, 1), 16); }, {x, w3, b3}},
        {"conv s2", [&] { return probe(ops::conv2d(x, w3, b3, 3, 2, 1), 17); }, {x, w3, b3}},
        {"upsample", [&] { return probe(ops::upsample_nearest2(x), 18); }, {x}},
        {"dwt", [&] { return probe(ops::dwt(x), 19); }, {x}},
        {"idwt", [&] { return probe(ops::idwt(ops::concat({x, y, x, pos})), 20); }, {x, y, pos}},
        {"layer_norm", [&] { return probe(ops::layer_norm_channels(x, mu, cv), 21); }, {x, mu, cv}},
        {"mean", [&] { return ops::mean(ops::mul(x, y)); }, {x, y}},
        {"mean_abs", [&] { return ops::mean_abs(x); }, {x}},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        auto r = check_gradients(c.f, c.leaves, 12, rng);
        CHECK(r.max_rel_error < 1e-5);
    }
}

TEST_CASE("gradients accumulate through shared subexpressions") {
    auto x = Tensor::from({1, 1, 1}, {3.0}, true);
    auto y = ops::add(ops::mul(x, x), x);  // x^2 + x
    y.backward();
    CHECK(x.grad()[0] == doctest::Approx(7.0));
}

TEST_CASE("detach and non-leaf mutation") {
    auto x = Tensor::from({1, 1, 2}, {1.0, 2.0}, true);
    auto y = ops::scale(x, 2.0);
    CHECK_FALSE(y.detach().requires_grad());
    CHECK_THROWS(y.mutable_values());
}
