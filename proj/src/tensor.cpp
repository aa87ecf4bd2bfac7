#include "hdrseq/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "hdrseq/imaging.hpp"
#include "hdrseq/wavelet.hpp"

namespace hdrseq {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

std::string Shape::str() const {
    return "[" + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
}

std::vector<double>& Node::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

Tensor Tensor::zeros(Shape s, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->shape = s;
    n->value.assign(s.numel(), 0.0);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::full(Shape s, double v) {
    Tensor t = zeros(s);
    std::fill(t.node_->value.begin(), t.node_->value.end(), v);
    return t;
}

Tensor Tensor::from(Shape s, std::vector<double> values, bool requires_grad) {
    if (values.size() != s.numel()) throw ShapeError("Tensor::from: value count does not match shape " + s.str());
    auto n = std::make_shared<Node>();
    n->shape = s;
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return from({1, 1, 1}, {v}); }

const Shape& Tensor::shape() const { return node_->shape; }
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
std::span<const double> Tensor::values() const { return node_->value; }

std::span<double> Tensor::mutable_values() {
    if (!node_->parents.empty()) throw std::logic_error("mutable_values on a non-leaf tensor");
    return node_->value;
}

std::span<const double> Tensor::grad() const { return node_->ensure_grad(); }
std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
    return node_->value[0];
}

void Tensor::zero_grad() {
    if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Grid<double> Tensor::to_grid() const { return to_grid_as<double>(); }

Tensor Tensor::detach() const { return from(shape(), node_->value); }

void Tensor::backward() const {
    if (numel() != 1) throw ShapeError("backward() requires a scalar output");
    if (!node_->requires_grad) return;
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    // Iterative post-order DFS.
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->parents.size()) {
            Node* p = n->parents[i++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward) {
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->value = std::move(value);
    bool needs = false;
    for (const auto& t : inputs) needs = needs || (t.defined() && t.requires_grad());
    if (needs) {
        n->requires_grad = true;
        n->parents.reserve(inputs.size());
        for (const auto& t : inputs) n->parents.push_back(t.node_ptr());
        n->backward_fn = std::move(backward);
    }
    return Tensor(std::move(n));
}

namespace ops {
namespace {

void check_same(const Tensor& a, const Tensor& b, const char* what) {
    if (!(a.shape() == b.shape())) {
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    }
}

void check_channel_vector(const Tensor& x, const Tensor& v, const char* what) {
    if (v.shape().c != x.shape().c || v.shape().h != 1 || v.shape().w != 1) {
        throw ShapeError(std::string(what) + ": expected per-channel vector for " + x.shape().str());
    }
}

// Applies f elementwise; df(x, y) gives dy/dx.
template <typename F, typename DF>
Tensor unary(const Tensor& x, F f, DF df) {
    auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    return make_result(x.shape(), std::move(out), {x}, [df](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(p.value[i], self.value[i]);
    });
}

Grid<double> as_grid(Shape s, std::span<const double> v) {
    Grid<double> g(s.c, s.h, s.w);
    std::copy(v.begin(), v.end(), g.data.begin());
    return g;
}

std::vector<double> haar_analysis(Shape s, std::span<const double> v) {
    auto sb = dwt_haar(as_grid(s, v));
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto* g : {&sb.ll, &sb.lh, &sb.hl, &sb.hh}) out.insert(out.end(), g->data.begin(), g->data.end());
    return out;
}

std::vector<double> haar_synthesis(Shape packed, std::span<const double> v) {
    const int c = packed.c / 4;
    const std::size_t n = static_cast<std::size_t>(c) * packed.plane();
    SubbandSet<double> sb;
    Grid<double>* bands[] = {&sb.ll, &sb.lh, &sb.hl, &sb.hh};
    for (int b = 0; b < 4; ++b) {
        *bands[b] = Grid<double>(c, packed.h, packed.w);
        std::copy(v.begin() + b * n, v.begin() + (b + 1) * n, bands[b]->data.begin());
    }
    return idwt_haar(sb).data;
}

// Column layout: row = (ci*k + ky)*k + kx, column = oy*wout + ox.
void im2col(std::span<const double> x, Shape s, int k, int stride, int pad, int hout, int wout, RowMat& cols) {
    cols.resize(static_cast<Eigen::Index>(s.c) * k * k, static_cast<Eigen::Index>(hout) * wout);
    for (int ci = 0; ci < s.c; ++ci) {
        const double* plane = x.data() + ci * s.plane();
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* row = cols.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * cols.cols();
                for (int oy = 0; oy < hout; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    double* dst = row + static_cast<std::size_t>(oy) * wout;
                    if (iy < 0 || iy >= s.h) {
                        std::fill(dst, dst + wout, 0.0);
                        continue;
                    }
                    const double* src = plane + static_cast<std::size_t>(iy) * s.w;
                    for (int ox = 0; ox < wout; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[ox] = (ix < 0 || ix >= s.w) ? 0.0 : src[ix];
                    }
                }
            }
        }
    }
}

void col2im(const RowMat& cols, Shape s, int k, int stride, int pad, int hout, int wout, std::vector<double>& dx) {
    for (int ci = 0; ci < s.c; ++ci) {
        double* plane = dx.data() + ci * s.plane();
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* row = cols.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * cols.cols();
                for (int oy = 0; oy < hout; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= s.h) continue;
                    const double* src = row + static_cast<std::size_t>(oy) * wout;
                    double* dst = plane + static_cast<std::size_t>(iy) * s.w;
                    for (int ox = 0; ox < wout; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < s.w) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same(a, b, "add");
    auto av = a.values();
    auto bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (auto& p : self.parents) {
            if (!p->requires_grad) continue;
            auto& g = p->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same(a, b, "sub");
    auto av = a.values();
    auto bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            Node& p = *self.parents[k];
            if (!p.requires_grad) continue;
            const double sign = k == 0 ? 1.0 : -1.0;
            auto& g = p.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same(a, b, "mul");
    auto av = a.values();
    auto bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor mul_channel(const Tensor& x, const Tensor& v) {
    check_channel_vector(x, v, "mul_channel");
    const Shape s = x.shape();
    auto xv = x.values();
    auto vv = v.values();
    std::vector<double> out(xv.size());
    for (int c = 0; c < s.c; ++c) {
        for (std::size_t i = 0; i < s.plane(); ++i) out[c * s.plane() + i] = xv[c * s.plane() + i] * vv[c];
    }
    return make_result(s, std::move(out), {x, v}, [s](Node& self) {
        Node& px = *self.parents[0];
        Node& pv = *self.parents[1];
        for (int c = 0; c < s.c; ++c) {
            const std::size_t off = c * s.plane();
            if (px.requires_grad) {
                auto& g = px.ensure_grad();
                for (std::size_t i = 0; i < s.plane(); ++i) g[off + i] += self.grad[off + i] * pv.value[c];
            }
            if (pv.requires_grad) {
                double acc = 0.0;
                for (std::size_t i = 0; i < s.plane(); ++i) acc += self.grad[off + i] * px.value[off + i];
                pv.ensure_grad()[c] += acc;
            }
        }
    });
}

Tensor add_channel(const Tensor& x, const Tensor& v) {
    check_channel_vector(x, v, "add_channel");
    const Shape s = x.shape();
    auto xv = x.values();
    auto vv = v.values();
    std::vector<double> out(xv.size());
    for (int c = 0; c < s.c; ++c) {
        for (std::size_t i = 0; i < s.plane(); ++i) out[c * s.plane() + i] = xv[c * s.plane() + i] + vv[c];
    }
    return make_result(s, std::move(out), {x, v}, [s](Node& self) {
        Node& px = *self.parents[0];
        Node& pv = *self.parents[1];
        for (int c = 0; c < s.c; ++c) {
            const std::size_t off = c * s.plane();
            double acc = 0.0;
            for (std::size_t i = 0; i < s.plane(); ++i) acc += self.grad[off + i];
            if (px.requires_grad) {
                auto& g = px.ensure_grad();
                for (std::size_t i = 0; i < s.plane(); ++i) g[off + i] += self.grad[off + i];
            }
            if (pv.requires_grad) pv.ensure_grad()[c] += acc;
        }
    });
}

Tensor token_mix(const Tensor& x, const Tensor& prev, const Tensor& mu) {
    check_same(x, prev, "token_mix");
    check_channel_vector(x, mu, "token_mix");
    const Shape s = x.shape();
    auto xv = x.values();
    auto pv = prev.values();
    auto mv = mu.values();
    std::vector<double> out(xv.size());
    for (int c = 0; c < s.c; ++c) {
        for (std::size_t i = 0; i < s.plane(); ++i) {
            const std::size_t j = c * s.plane() + i;
            out[j] = mv[c] * xv[j] + (1.0 - mv[c]) * pv[j];
        }
    }
    return make_result(s, std::move(out), {x, prev, mu}, [s](Node& self) {
        Node& nx = *self.parents[0];
        Node& np = *self.parents[1];
        Node& nm = *self.parents[2];
        for (int c = 0; c < s.c; ++c) {
            const double m = nm.value[c];
            double acc = 0.0;
            for (std::size_t i = 0; i < s.plane(); ++i) {
                const std::size_t j = c * s.plane() + i;
                const double g = self.grad[j];
                if (nx.requires_grad) nx.ensure_grad()[j] += g * m;
                if (np.requires_grad) np.ensure_grad()[j] += g * (1.0 - m);
                acc += g * (nx.value[j] - np.value[j]);
            }
            if (nm.requires_grad) nm.ensure_grad()[c] += acc;
        }
    });
}

Tensor leaky_relu(const Tensor& x, double slope) {
    return unary(
        x, [slope](double v) { return v > 0.0 ? v : slope * v; },
        [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& x) {
    return unary(
        x,
        [](double v) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
    return unary(
        x, [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
        [](double v, double) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); });
}

Tensor relu_square(const Tensor& x) {
    return unary(
        x, [](double v) { return v > 0.0 ? v * v : 0.0; }, [](double v, double) { return v > 0.0 ? 2.0 * v : 0.0; });
}

Tensor clamp_min_zero(const Tensor& x) {
    return unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& x) {
    return unary(
        x, [](double v) { return std::fabs(v); },
        [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor tone_map(const Tensor& x, double kappa) {
    validate(ToneMapParams{kappa});
    for (double v : x.values()) {
        if (!(v >= 0.0)) throw DomainError("tone_map: negative or NaN radiance");
    }
    const double norm = 1.0 / std::log1p(kappa);
    return unary(
        x, [kappa, norm](double v) { return std::log1p(kappa * v) * norm; },
        [kappa, norm](double v, double) { return kappa * norm / (1.0 + kappa * v); });
}

Tensor concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const int h = parts[0].shape().h;
    const int w = parts[0].shape().w;
    int c = 0;
    for (const auto& p : parts) {
        if (p.shape().h != h || p.shape().w != w) throw ShapeError("concat: spatial size mismatch");
        c += p.shape().c;
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(c) * h * w);
    for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    return make_result({c, h, w}, std::move(out), parts, [](Node& self) {
        std::size_t off = 0;
        for (auto& p : self.parents) {
            const std::size_t n = p->value.size();
            if (p->requires_grad) {
                auto& g = p->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
            }
            off += n;
        }
    });
}

Tensor slice_channels(const Tensor& x, int begin, int count) {
    const Shape s = x.shape();
    if (begin < 0 || count < 0 || begin + count > s.c) throw ShapeError("slice_channels: range out of bounds");
    const std::size_t off = begin * s.plane();
    const std::size_t n = count * s.plane();
    std::vector<double> out(x.values().begin() + off, x.values().begin() + off + n);
    return make_result({count, s.h, s.w}, std::move(out), {x}, [off, n](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < n; ++i) g[off + i] += self.grad[i];
    });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int kernel, int stride, int pad) {
    const Shape s = x.shape();
    const int cout = weight.shape().c;
    const int patch = s.c * kernel * kernel;
    if (weight.shape().h != patch || weight.shape().w != 1) {
        throw ShapeError("conv2d: weight " + weight.shape().str() + " does not match input " + s.str());
    }
    if (bias.defined() && !(bias.shape() == Shape{cout, 1, 1})) throw ShapeError("conv2d: bias shape");
    const int hout = (s.h + 2 * pad - kernel) / stride + 1;
    const int wout = (s.w + 2 * pad - kernel) / stride + 1;
    if (hout <= 0 || wout <= 0) throw ShapeError("conv2d: input smaller than kernel");

    RowMat cols;
    im2col(x.values(), s, kernel, stride, pad, hout, wout, cols);
    std::vector<double> out(static_cast<std::size_t>(cout) * hout * wout);
    MapMat om(out.data(), cout, static_cast<Eigen::Index>(hout) * wout);
    ConstMapMat wm(weight.values().data(), cout, patch);
    om.noalias() = wm * cols;
    if (bias.defined()) {
        auto bv = bias.values();
        for (int c = 0; c < cout; ++c) om.row(c).array() += bv[c];
    }
    std::vector<Tensor> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    return make_result({cout, hout, wout}, std::move(out), inputs,
                       [s, kernel, stride, pad, hout, wout, cout, patch](Node& self) {
                           Node& nx = *self.parents[0];
                           Node& nw = *self.parents[1];
                           ConstMapMat gout(self.grad.data(), cout, static_cast<Eigen::Index>(hout) * wout);
                           if (nw.requires_grad) {
                               RowMat cols;
                               im2col(nx.value, s, kernel, stride, pad, hout, wout, cols);
                               MapMat gw(nw.ensure_grad().data(), cout, patch);
                               gw.noalias() += gout * cols.transpose();
                           }
                           if (nx.requires_grad) {
                               ConstMapMat wm(nw.value.data(), cout, patch);
                               RowMat dcols = wm.transpose() * gout;
                               col2im(dcols, s, kernel, stride, pad, hout, wout, nx.ensure_grad());
                           }
                           if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
                               auto& gb = self.parents[2]->ensure_grad();
                               for (int c = 0; c < cout; ++c) gb[c] += gout.row(c).sum();
                           }
                       });
}

Tensor upsample_nearest2(const Tensor& x) {
    const Shape s = x.shape();
    const Shape o{s.c, 2 * s.h, 2 * s.w};
    auto xv = x.values();
    std::vector<double> out(o.numel());
    for (int c = 0; c < s.c; ++c) {
        for (int y = 0; y < o.h; ++y) {
            for (int xx = 0; xx < o.w; ++xx) {
                out[c * o.plane() + y * o.w + xx] = xv[c * s.plane() + (y / 2) * s.w + xx / 2];
            }
        }
    }
    return make_result(o, std::move(out), {x}, [s, o](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (int c = 0; c < s.c; ++c) {
            for (int y = 0; y < o.h; ++y) {
                for (int xx = 0; xx < o.w; ++xx) {
                    g[c * s.plane() + (y / 2) * s.w + xx / 2] += self.grad[c * o.plane() + y * o.w + xx];
                }
            }
        }
    });
}

Tensor dwt(const Tensor& x) {
    const Shape s = x.shape();
    if (s.h % 2 != 0 || s.w % 2 != 0) throw ShapeError("dwt: height and width must be even, got " + s.str());
    const Shape o{4 * s.c, s.h / 2, s.w / 2};
    return make_result(o, haar_analysis(s, x.values()), {x}, [o](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        // Orthonormal: the adjoint of analysis is synthesis.
        auto back = haar_synthesis(o, self.grad);
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += back[i];
    });
}

Tensor idwt(const Tensor& x) {
    const Shape s = x.shape();
    if (s.c % 4 != 0) throw ShapeError("idwt: channel count must be a multiple of 4");
    const Shape o{s.c / 4, 2 * s.h, 2 * s.w};
    return make_result(o, haar_synthesis(s, x.values()), {x}, [o](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto back = haar_analysis(o, self.grad);
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += back[i];
    });
}

Tensor layer_norm_channels(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    check_channel_vector(x, gain, "layer_norm_channels");
    check_channel_vector(x, bias, "layer_norm_channels");
    const Shape s = x.shape();
    const std::size_t np = s.plane();
    auto xv = x.values();
    auto gv = gain.values();
    auto bv = bias.values();
    std::vector<double> xhat(xv.size());
    std::vector<double> inv_std(np);
    std::vector<double> out(xv.size());
    for (std::size_t p = 0; p < np; ++p) {
        double mu = 0.0;
        for (int c = 0; c < s.c; ++c) mu += xv[c * np + p];
        mu /= s.c;
        double var = 0.0;
        for (int c = 0; c < s.c; ++c) {
            const double d = xv[c * np + p] - mu;
            var += d * d;
        }
        var /= s.c;
        inv_std[p] = 1.0 / std::sqrt(var + eps);
        for (int c = 0; c < s.c; ++c) {
            const std::size_t j = c * np + p;
            xhat[j] = (xv[j] - mu) * inv_std[p];
            out[j] = gv[c] * xhat[j] + bv[c];
        }
    }
    return make_result(s, std::move(out), {x, gain, bias},
                       [s, np, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                           Node& nx = *self.parents[0];
                           Node& ng = *self.parents[1];
                           Node& nb = *self.parents[2];
                           for (int c = 0; c < s.c; ++c) {
                               double dg = 0.0;
                               double db = 0.0;
                               for (std::size_t p = 0; p < np; ++p) {
                                   dg += self.grad[c * np + p] * xhat[c * np + p];
                                   db += self.grad[c * np + p];
                               }
                               if (ng.requires_grad) ng.ensure_grad()[c] += dg;
                               if (nb.requires_grad) nb.ensure_grad()[c] += db;
                           }
                           if (!nx.requires_grad) return;
                           auto& gx = nx.ensure_grad();
                           for (std::size_t p = 0; p < np; ++p) {
                               double m1 = 0.0;
                               double m2 = 0.0;
                               for (int c = 0; c < s.c; ++c) {
                                   const double dxh = self.grad[c * np + p] * ng.value[c];
                                   m1 += dxh;
                                   m2 += dxh * xhat[c * np + p];
                               }
                               m1 /= s.c;
                               m2 /= s.c;
                               for (int c = 0; c < s.c; ++c) {
                                   const std::size_t j = c * np + p;
                                   const double dxh = self.grad[j] * ng.value[c];
                                   gx[j] += inv_std[p] * (dxh - m1 - xhat[j] * m2);
                               }
                           }
                       });
}

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    return make_result({1, 1, 1}, {acc}, {x}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (auto& v : g) v += self.grad[0];
    });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mean_abs(const Tensor& x) { return mean(abs(x)); }

}  // namespace ops
}  // namespace hdrseq
