#include <doctest.h>

#include <cmath>
#include <random>

#include "hdrseq/metrics.hpp"
#include "oracles.hpp"

using namespace hdrseq;

namespace {

Image random_image(int h, int w, std::mt19937_64& rng, double hi = 2.0) {
    std::uniform_real_distribution<double> u(0.0, hi);
    Image f(3, h, w);
    for (auto& v : f.data) v = u(rng);
    return f;
}

ImageSequence random_sequence(int steps, std::mt19937_64& rng) {
    ImageSequence s;
    for (int t = 0; t < steps; ++t) s.push_back(random_image(16, 16, rng));
    return s;
}

// Radiance whose tone-mapped value is y.
double untone(double y) { return std::expm1(y * std::log1p(5000.0)) / 5000.0; }

}  // namespace

TEST_CASE("PSNR conventions") {
    std::mt19937_64 rng(1);
    auto a = random_image(16, 16, rng);
    CHECK(psnr_mu(a, a, {}) == kPsnrCap);
    Image p(3, 4, 4, untone(0.3)), q(3, 4, 4, untone(0.4));
    CHECK(psnr_mu(p, q, {}) == doctest::Approx(20.0).epsilon(1e-9));
    auto b = random_image(16, 16, rng);
    CHECK(psnr_mu(a, b, {}) == doctest::Approx(psnr_mu(b, a, {})));
    CHECK_THROWS_AS(psnr(a, Image(3, 4, 4), 1.0), ShapeError);
}

TEST_CASE("SSIM conventions") {
    std::mt19937_64 rng(2);
    auto a = random_image(16, 16, rng);
    CHECK(ssim_mu(a, a, {}) == doctest::Approx(1.0).epsilon(1e-12));
    Image neg = a;
    for (auto& v : neg.data) v = 2.0 - v;
    CHECK(ssim_mu(a, neg, {}) < 1.0);
    auto b = random_image(16, 16, rng);
    CHECK(ssim_mu(a, b, {}) == doctest::Approx(ssim_mu(b, a, {})));
    CHECK_THROWS_AS(ssim(Image(3, 10, 16), Image(3, 10, 16)), ShapeError);
}

TEST_CASE("SSIM decreases as noise grows") {
    std::mt19937_64 rng(3);
    Image base(3, 24, 24);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 24; ++y) {
            for (int x = 0; x < 24; ++x) base.at(c, y, x) = 0.5 + 0.3 * std::sin(0.4 * x + 0.3 * y + c);
        }
    }
    std::normal_distribution<double> n(0.0, 1.0);
    Image noise(3, 24, 24);
    for (auto& v : noise.data) v = n(rng);
    double prev = 1.0;
    for (double sigma : {0.01, 0.03, 0.1, 0.2, 0.4}) {
        Image noisy = base;
        for (std::size_t i = 0; i < noisy.size(); ++i) noisy.data[i] += sigma * noise.data[i];
        const double s = ssim(noisy, base);
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("every metric matches the brute-force reference") {
    std::mt19937_64 rng(4);
    const double k = 5000.0;
    for (int trial = 0; trial < 3; ++trial) {
        auto xh = random_sequence(4, rng);
        auto x = random_sequence(4, rng);
        auto r = evaluate_sequence("s", xh, x, {});
        CHECK(std::fabs(r.psnr_t - oracle::psnr_t(xh, x, k)) < 1e-6);
        CHECK(std::fabs(r.ssim_t - oracle::ssim_t(xh, x, k)) < 1e-6);
        CHECK(std::fabs(r.t_psnr - oracle::t_psnr(xh, x, k)) < 1e-6);
        CHECK(std::fabs(r.t_ssim - oracle::t_ssim(xh, x, k)) < 1e-6);
        CHECK(std::fabs(r.std - oracle::std_psnr(xh, x, k)) < 1e-6);
        CHECK(std::fabs(r.ab - oracle::ab(xh, x, k)) < 1e-6);
        CHECK(std::fabs(r.madb - oracle::madb(xh, k)) < 1e-6);
        CHECK(std::fabs(r.lsd - oracle::lsd(xh, k)) < 1e-6);
        CHECK(std::fabs(per_frame_std(xh, x, {}) - oracle::std_psnr(xh, x, k)) < 1e-6);
    }
}

TEST_CASE("temporal metrics on identical and static sequences") {
    std::mt19937_64 rng(5);
    auto x = random_sequence(3, rng);
    auto tm = temporal_metrics(x, x, {});
    CHECK(tm.t_psnr == kPsnrCap);
    CHECK(tm.t_ssim == doctest::Approx(1.0));
    ImageSequence a(3, x[0]), b(3, x[1]);
    tm = temporal_metrics(a, b, {});
    CHECK(tm.t_psnr == kPsnrCap);
    CHECK(tm.t_ssim == doctest::Approx(1.0));
    CHECK_THROWS(temporal_metrics({x[0]}, {x[0]}, {}));
}

TEST_CASE("brightness statistics hand cases") {
    // Grey frames whose brightness is exactly 100 and 110.
    Image f100(3, 4, 4, untone(100.0 / 255.0)), f110(3, 4, 4, untone(110.0 / 255.0));
    CHECK(frame_brightness(f100, {}) == doctest::Approx(100.0).epsilon(1e-12));
    ImageSequence alt{f100, f110, f100, f110};
    auto b = brightness_stats(alt, nullptr, {});
    CHECK_FALSE(b.ab.has_value());
    CHECK(b.madb == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(b.lsd == doctest::Approx(5.0).epsilon(1e-9));
    ImageSequence flat(4, f100);
    b = brightness_stats(flat, &flat, {});
    CHECK(*b.ab == 0.0);
    CHECK(b.madb == 0.0);
    CHECK(b.lsd == 0.0);
}

TEST_CASE("per-frame PSNR spread") {
    // Uniform tone-mapped errors chosen so the frame PSNRs are 30 and 34 dB.
    Image ref(3, 4, 4, untone(0.5));
    Image e30(3, 4, 4, untone(0.5 + std::pow(10.0, -1.5))), e34(3, 4, 4, untone(0.5 + std::pow(10.0, -1.7)));
    CHECK(per_frame_std({e30, e34}, {ref, ref}, {}) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(per_frame_std({e30, e30, e30}, {ref, ref, ref}, {}) == doctest::Approx(0.0));
    CHECK_THROWS(per_frame_std({ref}, {ref}, {}));
}

TEST_CASE("single-frame report flags temporal metrics") {
    std::mt19937_64 rng(6);
    auto x = random_sequence(1, rng);
    auto r = evaluate_sequence("one", x, x, {});
    CHECK(std::isnan(r.t_psnr));
    CHECK(std::isnan(r.std));
    CHECK_FALSE(r.note.empty());
    CHECK(r.psnr_t == kPsnrCap);
}

TEST_CASE("report serialisation round-trips") {
    std::mt19937_64 rng(7);
    auto r = evaluate_sequence("seq_a", random_sequence(4, rng), random_sequence(4, rng), {});
    r.runtime_ms = 12.5;
    auto back = SequenceReport::from_key_value(r.to_key_value());
    CHECK(back.name == "seq_a");
    CHECK(back.frames == 4);
    CHECK(back.psnr_t == doctest::Approx(r.psnr_t).epsilon(1e-6));
    CHECK(back.lsd == doctest::Approx(r.lsd).epsilon(1e-6));
    CHECK(back.runtime_ms == doctest::Approx(12.5));
    CHECK(back.psnr_trace.size() == 4);
    CHECK(SequenceReport::table_columns().front() == "sequence");
    CHECK(SequenceReport::table_columns().size() == 11);
    auto row = r.to_table_row();
    CHECK(std::count(row.begin(), row.end(), '\t') == 10);
    auto m = aggregate_reports({r, back});
    CHECK(m.name == "mean");
    CHECK(m.frames == 8);
    CHECK(m.psnr_t == doctest::Approx(r.psnr_t).epsilon(1e-6));
}
