#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hdrseq/tensor.hpp"

namespace hdrseq {

// Named view of every learnable tensor in a model, in a fixed order.
class ParamSet {
public:
    void add(std::string name, Tensor t) { entries_.emplace_back(std::move(name), std::move(t)); }
    void extend(const std::string& prefix, const ParamSet& other) {
        for (const auto& [n, t] : other.entries_) add(prefix + n, t);
    }

    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::size_t count() const;
    void zero_grad();
    Tensor find(const std::string& name) const;

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
};

using Rng = std::mt19937_64;

struct Conv2d {
    Tensor weight;  // [out, in*k*k, 1]
    Tensor bias;    // [out, 1, 1]; undefined when bias-free
    int in = 0;
    int out = 0;
    int kernel = 3;
    int stride = 1;

    Conv2d() = default;
    Conv2d(int in_channels, int out_channels, int kernel, int stride, bool with_bias, Rng& rng);

    Tensor operator()(const Tensor& x) const;
    void collect(ParamSet& ps, const std::string& prefix) const;
    // Sets weight and bias to zero.
    void zero();
};

// Two 3x3 convolutions, each followed by a leaky rectifier.
struct ConvBlock {
    Conv2d first;
    Conv2d second;

    ConvBlock() = default;
    ConvBlock(int in, int out, Rng& rng);
    Tensor operator()(const Tensor& x) const;
    void collect(ParamSet& ps, const std::string& prefix) const;
};

// Entry convolution to `out` channels followed by one residual unit:
// y = h + conv(lrelu(conv(h))), h = lrelu(conv_in(x)).
struct ResidualCell {
    Conv2d entry;
    Conv2d body1;
    Conv2d body2;

    ResidualCell() = default;
    ResidualCell(int in, int out, Rng& rng);
    Tensor operator()(const Tensor& x) const;
    void collect(ParamSet& ps, const std::string& prefix) const;
};

inline constexpr double kLeakySlope = 0.1;

Tensor param_vector(int channels, double value);

}  // namespace hdrseq
