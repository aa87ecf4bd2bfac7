#pragma once

// Linear-complexity temporal mixing along a frame sequence. Each spatial site
// of a [C, h, w] feature map is an independent length-T token stream; all
// projections are shared across sites.

#include <vector>

#include "hdrseq/layers.hpp"

namespace hdrseq {

// Weighted key-value aggregation with channel-wise decay w and current-token
// bonus u. For channel c at step t (0-based):
//   wkv_t = (sum_{i<t} e^{-(t-1-i) w + k_i} v_i + e^{u + k_t} v_t)
//         / (sum_{i<t} e^{-(t-1-i) w + k_i}     + e^{u + k_t})
// Forward runs the O(T) recurrence with a running maximum exponent.
std::vector<Tensor> wkv(const std::vector<Tensor>& keys, const std::vector<Tensor>& values, const Tensor& decay,
                        const Tensor& bonus);

struct TimeMixParams {
    Tensor mix_k, mix_v, mix_r;  // [C,1,1] token-shift coefficients
    Conv2d key, value, receptance, output;
    Tensor decay;  // w
    Tensor bonus;  // u

    TimeMixParams() = default;
    TimeMixParams(int channels, Rng& rng);
    void collect(ParamSet& ps, const std::string& prefix) const;
};

struct ChannelMixParams {
    Tensor mix_k, mix_r;
    Conv2d key;         // C -> hidden
    Conv2d value;       // hidden -> C
    Conv2d receptance;  // C -> C

    ChannelMixParams() = default;
    ChannelMixParams(int channels, int hidden, Rng& rng);
    void collect(ParamSet& ps, const std::string& prefix) const;
};

struct RwkvBlockParams {
    Tensor norm1_gain, norm1_bias;
    Tensor norm2_gain, norm2_bias;
    TimeMixParams time;
    ChannelMixParams channel;

    RwkvBlockParams() = default;
    RwkvBlockParams(int channels, Rng& rng);
    void collect(ParamSet& ps, const std::string& prefix) const;
};

std::vector<Tensor> rwkv_time_mix(const std::vector<Tensor>& seq, const TimeMixParams& params);
std::vector<Tensor> rwkv_channel_mix(const std::vector<Tensor>& seq, const ChannelMixParams& params);
// x + time_mix(norm(x)), then + channel_mix(norm(.)).
std::vector<Tensor> rwkv_block(const std::vector<Tensor>& seq, const RwkvBlockParams& params);

}  // namespace hdrseq
