#include "hdrseq/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace hdrseq {

std::size_t ParamSet::count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
}

void ParamSet::zero_grad() {
    for (auto& [name, t] : entries_) t.zero_grad();
}

Tensor ParamSet::find(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
        if (n == name) return t;
    }
    throw std::out_of_range("no parameter named " + name);
}

Tensor param_vector(int channels, double value) {
    return Tensor::from({channels, 1, 1}, std::vector<double>(channels, value), true);
}

Conv2d::Conv2d(int in_channels, int out_channels, int k, int s, bool with_bias, Rng& rng)
    : in(in_channels), out(out_channels), kernel(k), stride(s) {
    const int fan_in = in * k * k;
    // He-uniform bound scaled for the leaky slope.
    const double bound = std::sqrt(6.0 / ((1.0 + kLeakySlope * kLeakySlope) * fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> w(static_cast<std::size_t>(out) * fan_in);
    for (auto& v : w) v = u(rng);
    weight = Tensor::from({out, fan_in, 1}, std::move(w), true);
    if (with_bias) bias = Tensor::zeros({out, 1, 1}, true);
}

Tensor Conv2d::operator()(const Tensor& x) const { return ops::conv2d(x, weight, bias, kernel, stride, kernel / 2); }

void Conv2d::collect(ParamSet& ps, const std::string& prefix) const {
    ps.add(prefix + ".weight", weight);
    if (bias.defined()) ps.add(prefix + ".bias", bias);
}

void Conv2d::zero() {
    for (auto& v : weight.mutable_values()) v = 0.0;
    if (bias.defined()) {
        for (auto& v : bias.mutable_values()) v = 0.0;
    }
}

ConvBlock::ConvBlock(int in, int out, Rng& rng) : first(in, out, 3, 1, true, rng), second(out, out, 3, 1, true, rng) {}

Tensor ConvBlock::operator()(const Tensor& x) const {
    return ops::leaky_relu(second(ops::leaky_relu(first(x), kLeakySlope)), kLeakySlope);
}

void ConvBlock::collect(ParamSet& ps, const std::string& prefix) const {
    first.collect(ps, prefix + ".0");
    second.collect(ps, prefix + ".1");
}

ResidualCell::ResidualCell(int in, int out, Rng& rng)
    : entry(in, out, 3, 1, true, rng), body1(out, out, 3, 1, true, rng), body2(out, out, 3, 1, true, rng) {}

Tensor ResidualCell::operator()(const Tensor& x) const {
    Tensor h = ops::leaky_relu(entry(x), kLeakySlope);
    return ops::add(h, body2(ops::leaky_relu(body1(h), kLeakySlope)));
}

void ResidualCell::collect(ParamSet& ps, const std::string& prefix) const {
    entry.collect(ps, prefix + ".entry");
    body1.collect(ps, prefix + ".body1");
    body2.collect(ps, prefix + ".body2");
}

}  // namespace hdrseq
