#include "hdrseq/losses.hpp"

#include <stdexcept>

namespace hdrseq {

namespace {

void check_pair(const std::vector<Tensor>& a, const std::vector<Tensor>& b, const char* what) {
    if (a.size() != b.size()) throw ShapeError(std::string(what) + ": sequence lengths differ");
    if (a.empty()) throw std::invalid_argument(std::string(what) + ": empty sequence");
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (!(a[t].shape() == b[t].shape())) throw ShapeError(std::string(what) + ": frame shapes differ");
    }
}

std::vector<Tensor> tone_mapped(const std::vector<Tensor>& seq, const ToneMapParams& p) {
    std::vector<Tensor> out;
    out.reserve(seq.size());
    for (const auto& f : seq) out.push_back(ops::tone_map(f, p.kappa));
    return out;
}

Tensor average(const std::vector<Tensor>& terms) {
    Tensor acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = ops::add(acc, terms[i]);
    return ops::scale(acc, 1.0 / static_cast<double>(terms.size()));
}

}  // namespace

Tensor loss_spatial(const std::vector<Tensor>& xhat, const std::vector<Tensor>& x, const ToneMapParams& p) {
    check_pair(xhat, x, "loss_spatial");
    auto a = tone_mapped(xhat, p);
    auto b = tone_mapped(x, p);
    std::vector<Tensor> terms;
    for (std::size_t t = 0; t < a.size(); ++t) terms.push_back(ops::mean_abs(ops::sub(a[t], b[t])));
    return average(terms);
}

Tensor loss_temporal(const std::vector<Tensor>& xhat, const std::vector<Tensor>& x, const ToneMapParams& p) {
    check_pair(xhat, x, "loss_temporal");
    if (xhat.size() < 2) throw std::invalid_argument("loss_temporal: needs at least two frames");
    auto a = tone_mapped(xhat, p);
    auto b = tone_mapped(x, p);
    std::vector<Tensor> terms;
    for (std::size_t t = 0; t + 1 < a.size(); ++t) {
        Tensor da = ops::sub(a[t + 1], a[t]);
        Tensor db = ops::sub(b[t + 1], b[t]);
        terms.push_back(ops::mean_abs(ops::sub(da, db)));
    }
    return average(terms);
}

Tensor loss_anchor(const std::vector<Tensor>& za, const std::vector<Tensor>& zb) {
    check_pair(za, zb, "loss_anchor");
    std::vector<Tensor> terms;
    for (std::size_t t = 0; t < za.size(); ++t) terms.push_back(ops::mean_abs(ops::sub(za[t], zb[t])));
    return average(terms);
}

Tensor loss_total(const Tensor& spatial, const Tensor& temporal, const Tensor& anchor, const LossWeights& w) {
    return ops::add(ops::add(spatial, ops::scale(temporal, w.lambda_t)), ops::scale(anchor, w.lambda_z));
}

double loss_total(double spatial, double temporal, double anchor, const LossWeights& w) {
    return spatial + w.lambda_t * temporal + w.lambda_z * anchor;
}

}  // namespace hdrseq
