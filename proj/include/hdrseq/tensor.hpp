#pragma once

// Minimal reverse-mode automatic differentiation over [channels, height, width]
// double-precision tensors. Every network component is written against these
// operations; gradients are accumulated into leaf tensors by Tensor::backward.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hdrseq/grid.hpp"

namespace hdrseq {

struct Shape {
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t numel() const { return static_cast<std::size_t>(c) * h * w; }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

struct Node;

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape s, bool requires_grad = false);
    static Tensor full(Shape s, double v);
    static Tensor from(Shape s, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v);
    template <typename T>
    static Tensor from_grid(const Grid<T>& g) {
        std::vector<double> v(g.data.begin(), g.data.end());
        return from({g.channels, g.height, g.width}, std::move(v));
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t numel() const { return shape().numel(); }
    bool requires_grad() const;

    std::span<const double> values() const;
    // Mutable access for leaves only (parameter initialisation, optimizer updates).
    std::span<double> mutable_values();
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    double item() const;
    void zero_grad();

    // Runs reverse accumulation from this scalar tensor.
    void backward() const;

    Grid<double> to_grid() const;
    template <typename T>
    Grid<T> to_grid_as() const {
        Grid<T> g(shape().c, shape().h, shape().w);
        auto v = values();
        for (std::size_t i = 0; i < v.size(); ++i) g.data[i] = static_cast<T>(v[i]);
        return g;
    }

    // Same values, no gradient history.
    Tensor detach() const;

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& node_ptr() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
    std::shared_ptr<Node> node_;

    friend Tensor make_result(Shape, std::vector<double>, std::vector<Tensor>,
                              std::function<void(Node&)>);
};

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    std::vector<double>& ensure_grad();
};

// Builds an op output. `backward` is retained only when some input needs a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward);

namespace ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

// Per-channel broadcasts; `v` has shape [C,1,1].
Tensor mul_channel(const Tensor& x, const Tensor& v);
Tensor add_channel(const Tensor& x, const Tensor& v);
// mu * x + (1 - mu) * prev with per-channel mu.
Tensor token_mix(const Tensor& x, const Tensor& prev, const Tensor& mu);

Tensor leaky_relu(const Tensor& x, double slope = 0.1);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor relu_square(const Tensor& x);
Tensor clamp_min_zero(const Tensor& x);
Tensor abs(const Tensor& x);
// log(1 + k x) / log(1 + k); throws DomainError on negative input.
Tensor tone_map(const Tensor& x, double kappa);

Tensor concat(const std::vector<Tensor>& parts);
Tensor slice_channels(const Tensor& x, int begin, int count);

// weight shape [Cout, Cin*k*k, 1]; bias [Cout,1,1] or undefined.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int kernel, int stride, int pad);
Tensor upsample_nearest2(const Tensor& x);

// Haar analysis into [ll | lh | hl | hh] channel blocks, and its inverse.
Tensor dwt(const Tensor& x);
Tensor idwt(const Tensor& x);

// Normalises over channels at each pixel, then applies per-channel gain/bias.
Tensor layer_norm_channels(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor mean_abs(const Tensor& x);

}  // namespace ops
}  // namespace hdrseq
