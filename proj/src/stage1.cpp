#include "hdrseq/stage1.hpp"

#include <stdexcept>

#include "hdrseq/imaging.hpp"

namespace hdrseq {

Stage1Params::Stage1Params(const Stage1Config& cfg, Rng& rng) : config(cfg) {
    const int c = cfg.width;
    if (c <= 0) throw std::invalid_argument("stage 1 width must be positive");
    const int in = input_channels();
    project1 = Conv2d(in, c, 3, 1, true, rng);
    project2 = Conv2d(c, c, 3, 1, true, rng);
    tpa_forward = ConvBlock(3 * c, c, rng);
    tpa_backward = ConvBlock(3 * c, c, rng);
    reliability = Conv2d(2 * c, c, 3, 1, true, rng);
    phi_low = Conv2d(c, c, 3, 1, false, rng);
    phi_high = Conv2d(c, c, 3, 1, false, rng);
    // Bias-free throughout, so the fusion residual vanishes when both gated inputs do.
    fuse1 = Conv2d(2 * c, c, 3, 1, false, rng);
    fuse2 = Conv2d(c, c, 3, 1, false, rng);
    decode1 = Conv2d(c, c, 3, 1, true, rng);
    decode2 = Conv2d(c, 3, 3, 1, true, rng);
}

ParamSet Stage1Params::parameters() const {
    ParamSet ps;
    project1.collect(ps, "project1");
    project2.collect(ps, "project2");
    tpa_forward.collect(ps, "tpa_forward");
    tpa_backward.collect(ps, "tpa_backward");
    reliability.collect(ps, "reliability");
    phi_low.collect(ps, "phi_low");
    phi_high.collect(ps, "phi_high");
    fuse1.collect(ps, "fuse1");
    fuse2.collect(ps, "fuse2");
    decode1.collect(ps, "decode1");
    decode2.collect(ps, "decode2");
    return ps;
}

namespace {

Tensor network_input(const LdrInput& y, const Stage1Params& params) {
    if (y.pixels.channels != 3) throw ShapeError("stage 1 expects 3-channel LDR frames");
    Tensor rgb = Tensor::from_grid(y.pixels);
    if (!params.config.linearized_input) return rgb;
    auto lin = linearize_ldr(y.pixels, y.exposure, CameraResponse{params.config.gamma});
    return ops::concat({rgb, Tensor::from_grid(lin)});
}

}  // namespace

FeatureBands extract_features(const LdrInput& y, const Stage1Params& params) {
    if (y.pixels.height % 2 != 0 || y.pixels.width % 2 != 0) {
        throw ShapeError("extract_features: frame height and width must be even");
    }
    Tensor f = params.project2(ops::leaky_relu(params.project1(network_input(y, params)), kLeakySlope));
    Tensor bands = ops::dwt(f);
    const int c = params.config.width;
    return {ops::slice_channels(bands, 0, c), ops::slice_channels(bands, c, 3 * c)};
}

TpaResult tpa_reliability(const Tensor& anchor_ll, const std::vector<Tensor>& backbone_ll,
                          const Stage1Params& params) {
    if (backbone_ll.empty()) throw std::invalid_argument("tpa_reliability: empty backbone sequence");
    for (const auto& b : backbone_ll) {
        if (!(b.shape() == anchor_ll.shape())) throw ShapeError("tpa_reliability: anchor/backbone shape mismatch");
    }
    const std::size_t t_len = backbone_ll.size();
    const Tensor zero = Tensor::zeros(anchor_ll.shape());
    TpaResult r;
    r.forward_states.resize(t_len);
    r.backward_states.resize(t_len);

    Tensor state = zero;
    for (std::size_t t = 0; t < t_len; ++t) {
        state = params.tpa_forward(ops::concat({state, anchor_ll, backbone_ll[t]}));
        r.forward_states[t] = state;
    }
    state = zero;
    for (std::size_t t = t_len; t-- > 0;) {
        state = params.tpa_backward(ops::concat({state, anchor_ll, backbone_ll[t]}));
        r.backward_states[t] = state;
    }
    r.alpha.reserve(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
        r.alpha.push_back(ops::sigmoid(params.reliability(ops::concat({r.forward_states[t], r.backward_states[t]}))));
    }
    return r;
}

Tensor cff_fuse(const Tensor& backbone_ll, const Tensor& anchor_low_ll, const Tensor& anchor_high_ll,
                const Tensor& alpha_low, const Tensor& alpha_high, const Stage1Params& params) {
    const Shape s = backbone_ll.shape();
    for (const Tensor* t : {&anchor_low_ll, &anchor_high_ll, &alpha_low, &alpha_high}) {
        if (!(t->shape() == s)) throw ShapeError("cff_fuse: input shapes disagree");
    }
    Tensor gated_low = ops::mul(alpha_low, params.phi_low(anchor_low_ll));
    Tensor gated_high = ops::mul(alpha_high, params.phi_high(anchor_high_ll));
    Tensor residual = params.fuse2(ops::leaky_relu(params.fuse1(ops::concat({gated_low, gated_high})), kLeakySlope));
    return ops::add(backbone_ll, residual);
}

std::vector<Tensor> stage1_forward(const std::vector<LdrInput>& backbone, const LdrInput& low, const LdrInput& high,
                                   const Stage1Params& params, const Stage1Options& options) {
    if (backbone.empty()) throw std::invalid_argument("stage1_forward: empty backbone");
    for (const auto& y : backbone) {
        if (!y.pixels.same_shape(low.pixels) || !y.pixels.same_shape(high.pixels)) {
            throw ShapeError("stage1_forward: all frames must share one size");
        }
    }
    FeatureBands f_low = extract_features(low, params);
    FeatureBands f_high = extract_features(high, params);
    std::vector<FeatureBands> f_mid;
    std::vector<Tensor> mid_ll;
    f_mid.reserve(backbone.size());
    for (const auto& y : backbone) {
        f_mid.push_back(extract_features(y, params));
        mid_ll.push_back(f_mid.back().ll);
    }

    std::vector<Tensor> alpha_low;
    std::vector<Tensor> alpha_high;
    if (options.close_gates) {
        alpha_low.assign(backbone.size(), Tensor::zeros(f_low.ll.shape()));
        alpha_high = alpha_low;
    } else {
        alpha_low = tpa_reliability(f_low.ll, mid_ll, params).alpha;
        alpha_high = tpa_reliability(f_high.ll, mid_ll, params).alpha;
    }

    std::vector<Tensor> z;
    z.reserve(backbone.size());
    for (std::size_t t = 0; t < backbone.size(); ++t) {
        Tensor fused = cff_fuse(mid_ll[t], f_low.ll, f_high.ll, alpha_low[t], alpha_high[t], params);
        Tensor feat = ops::idwt(ops::concat({fused, f_mid[t].high}));
        Tensor h = ops::leaky_relu(params.decode1(feat), kLeakySlope);
        z.push_back(ops::softplus(params.decode2(h)));
    }
    return z;
}

}  // namespace hdrseq
