#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "hdrseq/stage2.hpp"

using namespace hdrseq;
using hdrseq::testing::check_gradients;
using hdrseq::testing::random_tensor;

namespace {

Sequence random_sequence(int steps, Shape s, std::mt19937_64& rng, double lo = 0.0, double hi = 2.0,
                         bool grad = false) {
    Sequence z;
    for (int t = 0; t < steps; ++t) z.push_back(random_tensor(s, rng, lo, hi, grad));
    return z;
}

double max_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a.values()[i] - b.values()[i]));
    return m;
}

Tensor weighted(const Sequence& seq, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor acc = Tensor::scalar(0.0);
    for (const auto& y : seq) acc = ops::add(acc, ops::sum(ops::mul(y, random_tensor(y.shape(), rng))));
    return acc;
}

}  // namespace

TEST_CASE("fresh parameters give X == Z bit-exactly") {
    Rng prng(1);
    Stage2Params p(Stage2Config{6, 2}, prng);
    std::mt19937_64 rng(2);
    auto z = random_sequence(4, {3, 8, 12}, rng);
    auto r = stage2_forward(z, p);
    REQUIRE(r.x.size() == 4);
    for (std::size_t t = 0; t < z.size(); ++t) {
        CHECK(r.x[t].shape() == z[t].shape());
        for (std::size_t i = 0; i < z[t].numel(); ++i) CHECK(r.x[t].values()[i] == z[t].values()[i]);
    }
}

TEST_CASE("X - Z equals the decoder output exactly once the head is trained") {
    Rng prng(3);
    Stage2Params p(Stage2Config{4, 1}, prng);
    std::mt19937_64 rng(4);
    hdrseq::testing::randomize(p.decode2.weight, rng);
    hdrseq::testing::randomize(p.decode2.bias, rng);
    auto z = random_sequence(3, {3, 8, 8}, rng);
    auto r = stage2_forward(z, p);
    for (std::size_t t = 0; t < z.size(); ++t) {
        CHECK(max_diff(r.delta[t], Tensor::zeros(r.delta[t].shape())) > 0.0);
        for (std::size_t i = 0; i < z[t].numel(); ++i) {
            CHECK(r.x[t].values()[i] == z[t].values()[i] + r.delta[t].values()[i]);
        }
    }
}

TEST_CASE("first frame influences the last output") {
    for (int k : {1, 2}) {
        Rng prng(5);
        Stage2Params p(Stage2Config{4, k}, prng);
        std::mt19937_64 rng(6);
        hdrseq::testing::randomize(p.decode2.weight, rng);
        auto z = random_sequence(5, {3, 8, 8}, rng);
        auto a = stage2_forward(z, p);
        z[0] = random_tensor({3, 8, 8}, rng, 0.0, 2.0);
        auto b = stage2_forward(z, p);
        CHECK(max_diff(a.x.back(), b.x.back()) > 1e-9);
    }
}

TEST_CASE("encoder output shape and divisibility") {
    Rng prng(7);
    Stage2Params p(Stage2Config{5, 0}, prng);
    std::mt19937_64 rng(8);
    auto e = encode_downsample(random_sequence(2, {3, 8, 12}, rng), p);
    CHECK(e[0].shape() == Shape{5, 2, 3});
    CHECK_THROWS_AS(encode_downsample(random_sequence(1, {3, 6, 8}, rng), p), ShapeError);
    CHECK_THROWS_AS(encode_downsample(random_sequence(1, {4, 8, 8}, rng), p), ShapeError);
    CHECK_THROWS(bca_propagate({}, p));
}

TEST_CASE("aggregated features stack five blocks; LTM keeps the encoder shape") {
    Rng prng(9);
    Stage2Params p(Stage2Config{3, 1}, prng);
    std::mt19937_64 rng(10);
    auto enc = random_sequence(3, {3, 2, 2}, rng, -1, 1);
    auto bca = bca_propagate(enc, p);
    CHECK(bca.aggregated[1].shape() == Shape{15, 2, 2});
    CHECK(max_diff(ops::slice_channels(bca.aggregated[1], 0, 3), enc[1]) == 0.0);
    CHECK(max_diff(ops::slice_channels(bca.aggregated[1], 12, 3), bca.backward2[1]) == 0.0);
    CHECK(ltm_forward(bca.aggregated, p)[0].shape() == Shape{3, 2, 2});
}

TEST_CASE("an empty block stack reduces LTM to the projection") {
    Rng prng(11);
    Stage2Params p(Stage2Config{3, 0}, prng);
    std::mt19937_64 rng(12);
    auto agg = random_sequence(2, {15, 2, 2}, rng, -1, 1);
    auto h = ltm_forward(agg, p);
    for (std::size_t t = 0; t < agg.size(); ++t) CHECK(max_diff(h[t], p.ltm_project(agg[t])) == 0.0);
}

TEST_CASE("zeroing the first pass changes the second pass") {
    Rng prng(13);
    Stage2Params p(Stage2Config{3, 1}, prng);
    std::mt19937_64 rng(14);
    auto enc = random_sequence(4, {3, 2, 2}, rng, -1, 1);
    auto a = bca_propagate(enc, p);
    auto b = bca_propagate(enc, p, {true});
    for (std::size_t t = 0; t < enc.size(); ++t) {
        CHECK(max_diff(a.forward1[t], b.forward1[t]) == 0.0);
        CHECK(max_diff(a.forward2[t], b.forward2[t]) > 0.0);
        CHECK(max_diff(a.backward2[t], b.backward2[t]) > 0.0);
    }
}

TEST_CASE("zero input through bias-free layers stays zero") {
    Rng prng(15);
    Stage2Params p(Stage2Config{3, 1}, prng);
    for (auto* c : {&p.forward1.entry, &p.forward1.body1, &p.forward1.body2, &p.backward1.entry, &p.backward1.body1,
                    &p.backward1.body2, &p.forward2.entry, &p.forward2.body1, &p.forward2.body2, &p.backward2.entry,
                    &p.backward2.body1, &p.backward2.body2}) {
        if (c->bias.defined()) {
            for (auto& v : c->bias.mutable_values()) v = 0.0;
        }
    }
    Sequence zeros(3, Tensor::zeros({3, 2, 2}));
    auto r = bca_propagate(zeros, p);
    for (const auto& f : r.aggregated) {
        for (double v : f.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("propagation gradients") {
    std::mt19937_64 rng(16);
    for (int draw = 0; draw < 5; ++draw) {
        Rng prng(200 + draw);
        Stage2Params p(Stage2Config{2, 1}, prng);
        auto enc = random_sequence(3, {2, 2, 2}, rng, -1, 1, true);
        std::vector<Tensor> leaves(enc.begin(), enc.end());
        for (const auto& [n, t] : p.parameters().entries()) {
            if (n.starts_with("bca")) leaves.push_back(t);
        }
        auto f = [&] { return weighted(bca_propagate(enc, p).aggregated, 30 + draw); };
        CHECK(check_gradients(f, leaves, 2, rng).max_rel_error < 1e-4);
    }
}

TEST_CASE("whole refinement gradients") {
    std::mt19937_64 rng(17);
    Rng prng(18);
    Stage2Params p(Stage2Config{2, 1}, prng);
    hdrseq::testing::randomize(p.decode2.weight, rng);
    auto z = random_sequence(2, {3, 4, 4}, rng, 0, 1, true);
    std::vector<Tensor> leaves(z.begin(), z.end());
    for (const auto& [n, t] : p.parameters().entries()) leaves.push_back(t);
    auto f = [&] { return weighted(stage2_forward(z, p).x, 40); };
    CHECK(check_gradients(f, leaves, 1, rng).max_rel_error < 1e-4);
}
