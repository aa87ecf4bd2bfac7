#pragma once

#include <vector>

#include "hdrseq/imaging.hpp"
#include "hdrseq/tensor.hpp"

namespace hdrseq {

struct LossWeights {
    double lambda_t = 0.5;
    double lambda_z = 0.1;
};

// ||.||_1 below is the mean absolute value over all pixels and channels.

// (1/T) sum_t ||tau(xhat_t) - tau(x_t)||_1
Tensor loss_spatial(const std::vector<Tensor>& xhat, const std::vector<Tensor>& x, const ToneMapParams& p);
// (1/(T-1)) sum_t ||(tau(xhat_{t+1}) - tau(xhat_t)) - (tau(x_{t+1}) - tau(x_t))||_1; needs T >= 2.
Tensor loss_temporal(const std::vector<Tensor>& xhat, const std::vector<Tensor>& x, const ToneMapParams& p);
// (1/T) sum_t ||za_t - zb_t||_1
Tensor loss_anchor(const std::vector<Tensor>& za, const std::vector<Tensor>& zb);

Tensor loss_total(const Tensor& spatial, const Tensor& temporal, const Tensor& anchor, const LossWeights& w);
double loss_total(double spatial, double temporal, double anchor, const LossWeights& w);

}  // namespace hdrseq
