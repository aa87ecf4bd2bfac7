#include "hdrseq/rwkv.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hdrseq {

namespace {

// Stacked layout: [T*C, h, w], frame-major.
Tensor wkv_stacked(const Tensor& k, const Tensor& v, const Tensor& w, const Tensor& u, int steps) {
    const Shape s = k.shape();
    const int c = s.c / steps;
    const std::size_t np = s.plane();
    const std::size_t frame = static_cast<std::size_t>(c) * np;
    auto kv = k.values();
    auto vv = v.values();
    auto wv = w.values();
    auto uv = u.values();
    std::vector<double> out(kv.size());
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    for (int ch = 0; ch < c; ++ch) {
        const double wc = wv[ch];
        const double uc = uv[ch];
        for (std::size_t p = 0; p < np; ++p) {
            // Running state: num = sum e^{l_i - m} v_i, den = sum e^{l_i - m}.
            double num = 0.0;
            double den = 0.0;
            double m = neg_inf;
            for (int t = 0; t < steps; ++t) {
                const std::size_t j = t * frame + ch * np + p;
                const double kt = kv[j];
                const double vt = vv[j];
                double cur = uc + kt;
                double q = std::max(m, cur);
                double a = m == neg_inf ? 0.0 : std::exp(m - q);
                double b = std::exp(cur - q);
                out[j] = (a * num + b * vt) / (a * den + b);

                const double decayed = m - wc;
                q = std::max(decayed, kt);
                a = m == neg_inf ? 0.0 : std::exp(decayed - q);
                b = std::exp(kt - q);
                num = a * num + b * vt;
                den = a * den + b;
                m = q;
            }
        }
    }
    return make_result(s, std::move(out), {k, v, w, u}, [steps, c, np, frame](Node& self) {
        Node& nk = *self.parents[0];
        Node& nv = *self.parents[1];
        Node& nw = *self.parents[2];
        Node& nu = *self.parents[3];
        // Direct gradient of the normalised weights; quadratic in T, which is
        // short at training time.
        std::vector<double> logits(steps);
        std::vector<double> weights(steps);
        for (int ch = 0; ch < c; ++ch) {
            const double wc = nw.value[ch];
            const double uc = nu.value[ch];
            double dw = 0.0;
            double du = 0.0;
            for (std::size_t p = 0; p < np; ++p) {
                for (int t = 0; t < steps; ++t) {
                    const std::size_t jt = t * frame + ch * np + p;
                    const double g = self.grad[jt];
                    if (g == 0.0) continue;
                    double m = -std::numeric_limits<double>::infinity();
                    for (int i = 0; i <= t; ++i) {
                        const double ki = nk.value[i * frame + ch * np + p];
                        logits[i] = i < t ? -(t - 1 - i) * wc + ki : uc + ki;
                        m = std::max(m, logits[i]);
                    }
                    double z = 0.0;
                    for (int i = 0; i <= t; ++i) {
                        weights[i] = std::exp(logits[i] - m);
                        z += weights[i];
                    }
                    const double y = self.value[jt];
                    for (int i = 0; i <= t; ++i) {
                        const std::size_t ji = i * frame + ch * np + p;
                        const double pw = weights[i] / z;
                        const double centred = nv.value[ji] - y;
                        if (nv.requires_grad) nv.ensure_grad()[ji] += g * pw;
                        if (nk.requires_grad) nk.ensure_grad()[ji] += g * pw * centred;
                        if (i < t) {
                            dw += g * pw * centred * -static_cast<double>(t - 1 - i);
                        } else {
                            du += g * pw * centred;
                        }
                    }
                }
            }
            if (nw.requires_grad) nw.ensure_grad()[ch] += dw;
            if (nu.requires_grad) nu.ensure_grad()[ch] += du;
        }
    });
}

Tensor shifted(const std::vector<Tensor>& seq, std::size_t t) {
    return t == 0 ? Tensor::zeros(seq[0].shape()) : seq[t - 1];
}

}  // namespace

std::vector<Tensor> wkv(const std::vector<Tensor>& keys, const std::vector<Tensor>& values, const Tensor& decay,
                        const Tensor& bonus) {
    if (keys.empty() || keys.size() != values.size()) throw std::invalid_argument("wkv: key/value sequence lengths");
    const Shape s = keys[0].shape();
    for (std::size_t t = 0; t < keys.size(); ++t) {
        if (!(keys[t].shape() == s) || !(values[t].shape() == s)) throw ShapeError("wkv: frame shape mismatch");
    }
    if (!(decay.shape() == Shape{s.c, 1, 1}) || !(bonus.shape() == Shape{s.c, 1, 1})) {
        throw ShapeError("wkv: decay/bonus must be per-channel vectors");
    }
    const int steps = static_cast<int>(keys.size());
    Tensor stacked = wkv_stacked(ops::concat(keys), ops::concat(values), decay, bonus, steps);
    std::vector<Tensor> out;
    out.reserve(keys.size());
    for (int t = 0; t < steps; ++t) out.push_back(ops::slice_channels(stacked, t * s.c, s.c));
    return out;
}

TimeMixParams::TimeMixParams(int channels, Rng& rng)
    : mix_k(param_vector(channels, 0.5)),
      mix_v(param_vector(channels, 0.5)),
      mix_r(param_vector(channels, 0.5)),
      key(channels, channels, 1, 1, false, rng),
      value(channels, channels, 1, 1, false, rng),
      receptance(channels, channels, 1, 1, false, rng),
      output(channels, channels, 1, 1, false, rng) {
    std::vector<double> w(channels);
    // Decay rates spread from slow to fast across channels.
    for (int c = 0; c < channels; ++c) w[c] = channels > 1 ? 0.1 + 2.9 * c / (channels - 1) : 1.0;
    decay = Tensor::from({channels, 1, 1}, std::move(w), true);
    bonus = param_vector(channels, 0.5);
}

void TimeMixParams::collect(ParamSet& ps, const std::string& prefix) const {
    ps.add(prefix + ".mix_k", mix_k);
    ps.add(prefix + ".mix_v", mix_v);
    ps.add(prefix + ".mix_r", mix_r);
    key.collect(ps, prefix + ".key");
    value.collect(ps, prefix + ".value");
    receptance.collect(ps, prefix + ".receptance");
    output.collect(ps, prefix + ".output");
    ps.add(prefix + ".decay", decay);
    ps.add(prefix + ".bonus", bonus);
}

ChannelMixParams::ChannelMixParams(int channels, int hidden, Rng& rng)
    : mix_k(param_vector(channels, 0.5)),
      mix_r(param_vector(channels, 0.5)),
      key(channels, hidden, 1, 1, false, rng),
      value(hidden, channels, 1, 1, false, rng),
      receptance(channels, channels, 1, 1, false, rng) {}

void ChannelMixParams::collect(ParamSet& ps, const std::string& prefix) const {
    ps.add(prefix + ".mix_k", mix_k);
    ps.add(prefix + ".mix_r", mix_r);
    key.collect(ps, prefix + ".key");
    value.collect(ps, prefix + ".value");
    receptance.collect(ps, prefix + ".receptance");
}

RwkvBlockParams::RwkvBlockParams(int channels, Rng& rng)
    : norm1_gain(param_vector(channels, 1.0)),
      norm1_bias(param_vector(channels, 0.0)),
      norm2_gain(param_vector(channels, 1.0)),
      norm2_bias(param_vector(channels, 0.0)),
      time(channels, rng),
      channel(channels, 2 * channels, rng) {}

void RwkvBlockParams::collect(ParamSet& ps, const std::string& prefix) const {
    ps.add(prefix + ".norm1_gain", norm1_gain);
    ps.add(prefix + ".norm1_bias", norm1_bias);
    ps.add(prefix + ".norm2_gain", norm2_gain);
    ps.add(prefix + ".norm2_bias", norm2_bias);
    time.collect(ps, prefix + ".time");
    channel.collect(ps, prefix + ".channel");
}

std::vector<Tensor> rwkv_time_mix(const std::vector<Tensor>& seq, const TimeMixParams& params) {
    if (seq.empty()) throw std::invalid_argument("rwkv_time_mix: empty sequence");
    std::vector<Tensor> k, v, r;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const Tensor prev = shifted(seq, t);
        k.push_back(params.key(ops::token_mix(seq[t], prev, params.mix_k)));
        v.push_back(params.value(ops::token_mix(seq[t], prev, params.mix_v)));
        r.push_back(params.receptance(ops::token_mix(seq[t], prev, params.mix_r)));
    }
    auto agg = wkv(k, v, params.decay, params.bonus);
    std::vector<Tensor> out;
    out.reserve(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) out.push_back(ops::mul(ops::sigmoid(r[t]), params.output(agg[t])));
    return out;
}

std::vector<Tensor> rwkv_channel_mix(const std::vector<Tensor>& seq, const ChannelMixParams& params) {
    if (seq.empty()) throw std::invalid_argument("rwkv_channel_mix: empty sequence");
    std::vector<Tensor> out;
    out.reserve(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const Tensor prev = shifted(seq, t);
        Tensor k = ops::relu_square(params.key(ops::token_mix(seq[t], prev, params.mix_k)));
        Tensor r = ops::sigmoid(params.receptance(ops::token_mix(seq[t], prev, params.mix_r)));
        out.push_back(ops::mul(r, params.value(k)));
    }
    return out;
}

std::vector<Tensor> rwkv_block(const std::vector<Tensor>& seq, const RwkvBlockParams& params) {
    std::vector<Tensor> normed;
    normed.reserve(seq.size());
    for (const auto& x : seq) normed.push_back(ops::layer_norm_channels(x, params.norm1_gain, params.norm1_bias));
    auto mixed = rwkv_time_mix(normed, params.time);
    std::vector<Tensor> h;
    h.reserve(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) h.push_back(ops::add(seq[t], mixed[t]));

    normed.clear();
    for (const auto& x : h) normed.push_back(ops::layer_norm_channels(x, params.norm2_gain, params.norm2_bias));
    auto ffn = rwkv_channel_mix(normed, params.channel);
    for (std::size_t t = 0; t < seq.size(); ++t) h[t] = ops::add(h[t], ffn[t]);
    return h;
}

}  // namespace hdrseq
