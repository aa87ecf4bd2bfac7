#pragma once

// Alignment-free exposure fusion. Every LDR input is projected to C feature
// channels and split into Haar subbands; reliability maps are estimated from
// bidirectional recurrences over the backbone, then used to gate anchor
// features into each backbone frame's LL band.

#include <vector>

#include "hdrseq/grid.hpp"
#include "hdrseq/layers.hpp"

namespace hdrseq {

struct Stage1Config {
    int width = 32;
    // Appends the linearised frame to the RGB input (6 input channels).
    bool linearized_input = false;
    double gamma = 2.2;
};

struct FeatureBands {
    Tensor ll;    // [C, H/2, W/2]
    Tensor high;  // [3C, H/2, W/2], lh | hl | hh
};

struct Stage1Params {
    Stage1Config config;
    Conv2d project1;
    Conv2d project2;
    ConvBlock tpa_forward;
    ConvBlock tpa_backward;
    Conv2d reliability;
    Conv2d phi_low;
    Conv2d phi_high;
    Conv2d fuse1;
    Conv2d fuse2;
    Conv2d decode1;
    Conv2d decode2;

    Stage1Params() = default;
    Stage1Params(const Stage1Config& cfg, Rng& rng);

    int input_channels() const { return config.linearized_input ? 6 : 3; }
    ParamSet parameters() const;
};

// An LDR frame as fed to the network, with the exposure it was captured at.
struct LdrInput {
    Frame pixels;
    double exposure = 1.0;
};

FeatureBands extract_features(const LdrInput& y, const Stage1Params& params);

struct TpaResult {
    std::vector<Tensor> alpha;
    std::vector<Tensor> forward_states;
    std::vector<Tensor> backward_states;
};

TpaResult tpa_reliability(const Tensor& anchor_ll, const std::vector<Tensor>& backbone_ll,
                          const Stage1Params& params);

Tensor cff_fuse(const Tensor& backbone_ll, const Tensor& anchor_low_ll, const Tensor& anchor_high_ll,
                const Tensor& alpha_low, const Tensor& alpha_high, const Stage1Params& params);

struct Stage1Options {
    // Replaces both reliability maps with zeros.
    bool close_gates = false;
};

// Returns one 3-channel frame per backbone frame, same spatial size.
std::vector<Tensor> stage1_forward(const std::vector<LdrInput>& backbone, const LdrInput& low, const LdrInput& high,
                                   const Stage1Params& params, const Stage1Options& options = {});

}  // namespace hdrseq
