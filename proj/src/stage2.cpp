#include "hdrseq/stage2.hpp"

#include <stdexcept>

namespace hdrseq {

Stage2Params::Stage2Params(const Stage2Config& cfg, Rng& rng) : config(cfg) {
    const int c = cfg.width;
    if (c <= 0 || cfg.blocks < 0) throw std::invalid_argument("invalid stage 2 configuration");
    encode1 = Conv2d(3, c, 3, 2, true, rng);
    encode2 = Conv2d(c, c, 3, 2, true, rng);
    forward1 = ResidualCell(2 * c, c, rng);
    backward1 = ResidualCell(2 * c, c, rng);
    forward2 = ResidualCell(3 * c, c, rng);
    backward2 = ResidualCell(3 * c, c, rng);
    ltm_project = Conv2d(5 * c, c, 1, 1, true, rng);
    for (int b = 0; b < cfg.blocks; ++b) blocks.emplace_back(c, rng);
    decode1 = Conv2d(c, c, 3, 1, true, rng);
    decode2 = Conv2d(c, 3, 3, 1, true, rng);
    decode2.zero();
}

ParamSet Stage2Params::parameters() const {
    ParamSet ps;
    encode1.collect(ps, "encode1");
    encode2.collect(ps, "encode2");
    forward1.collect(ps, "bca_forward1");
    backward1.collect(ps, "bca_backward1");
    forward2.collect(ps, "bca_forward2");
    backward2.collect(ps, "bca_backward2");
    ltm_project.collect(ps, "ltm_project");
    for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b].collect(ps, "rwkv" + std::to_string(b));
    decode1.collect(ps, "decode1");
    decode2.collect(ps, "decode2");
    return ps;
}

Sequence encode_downsample(const Sequence& z, const Stage2Params& params) {
    Sequence out;
    out.reserve(z.size());
    for (const auto& frame : z) {
        if (frame.shape().c != 3) throw ShapeError("encode_downsample: expected 3-channel frames");
        if (frame.shape().h % 4 != 0 || frame.shape().w % 4 != 0) {
            throw ShapeError("encode_downsample: height and width must be divisible by 4, got " + frame.shape().str());
        }
        Tensor h = ops::leaky_relu(params.encode1(frame), kLeakySlope);
        out.push_back(ops::leaky_relu(params.encode2(h), kLeakySlope));
    }
    return out;
}

BcaOutput bca_propagate(const Sequence& encoded, const Stage2Params& params, const BcaOptions& options) {
    if (encoded.empty()) throw std::invalid_argument("bca_propagate: empty sequence");
    const std::size_t n = encoded.size();
    const Tensor zero = Tensor::zeros(encoded[0].shape());
    BcaOutput r;
    r.forward1.resize(n);
    r.backward1.resize(n);
    r.forward2.resize(n);
    r.backward2.resize(n);

    Tensor state = zero;
    for (std::size_t t = 0; t < n; ++t) r.forward1[t] = state = params.forward1(ops::concat({state, encoded[t]}));
    state = zero;
    for (std::size_t t = n; t-- > 0;) r.backward1[t] = state = params.backward1(ops::concat({state, encoded[t]}));

    auto pass1 = [&](const Sequence& s, std::size_t t) { return options.drop_first_pass ? zero : s[t]; };
    state = zero;
    for (std::size_t t = 0; t < n; ++t) {
        r.forward2[t] = state = params.forward2(ops::concat({state, pass1(r.backward1, t), encoded[t]}));
    }
    state = zero;
    for (std::size_t t = n; t-- > 0;) {
        r.backward2[t] = state = params.backward2(ops::concat({state, pass1(r.forward1, t), encoded[t]}));
    }

    r.aggregated.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        r.aggregated.push_back(ops::concat({encoded[t], r.forward1[t], r.backward1[t], r.forward2[t], r.backward2[t]}));
    }
    return r;
}

Sequence ltm_forward(const Sequence& aggregated, const Stage2Params& params) {
    if (aggregated.empty()) throw std::invalid_argument("ltm_forward: empty sequence");
    Sequence h;
    h.reserve(aggregated.size());
    for (const auto& f : aggregated) h.push_back(params.ltm_project(f));
    for (const auto& block : params.blocks) h = rwkv_block(h, block);
    return h;
}

Sequence decode_upsample(const Sequence& features, const Stage2Params& params) {
    Sequence out;
    out.reserve(features.size());
    for (const auto& f : features) {
        Tensor h = ops::leaky_relu(params.decode1(ops::upsample_nearest2(f)), kLeakySlope);
        out.push_back(params.decode2(ops::upsample_nearest2(h)));
    }
    return out;
}

Stage2Result stage2_forward(const Sequence& z, const Stage2Params& params) {
    Stage2Result r;
    r.delta = decode_upsample(ltm_forward(bca_propagate(encode_downsample(z, params), params).aggregated, params), params);
    r.x.reserve(z.size());
    for (std::size_t t = 0; t < z.size(); ++t) r.x.push_back(ops::add(z[t], r.delta[t]));
    return r;
}

}  // namespace hdrseq
