#pragma once

// Sequence-level residual refinement: X = Z + decode(ltm(bca(encode(Z)))).

#include <vector>

#include "hdrseq/layers.hpp"
#include "hdrseq/rwkv.hpp"

namespace hdrseq {

struct Stage2Config {
    int width = 48;
    int blocks = 2;
};

struct Stage2Params {
    Stage2Config config;
    Conv2d encode1;  // stride 2
    Conv2d encode2;  // stride 2
    ResidualCell forward1, backward1;
    ResidualCell forward2, backward2;
    Conv2d ltm_project;  // 5C' -> C', 1x1
    std::vector<RwkvBlockParams> blocks;
    Conv2d decode1;
    Conv2d decode2;  // zero-initialised

    Stage2Params() = default;
    Stage2Params(const Stage2Config& cfg, Rng& rng);
    ParamSet parameters() const;
};

using Sequence = std::vector<Tensor>;

Sequence encode_downsample(const Sequence& z, const Stage2Params& params);

struct BcaOutput {
    Sequence aggregated;  // [5C', h, w] per frame
    Sequence forward1, backward1, forward2, backward2;
};

struct BcaOptions {
    // Feeds zeros to pass 2 in place of the pass-1 states.
    bool drop_first_pass = false;
};

BcaOutput bca_propagate(const Sequence& encoded, const Stage2Params& params, const BcaOptions& options = {});
Sequence ltm_forward(const Sequence& aggregated, const Stage2Params& params);
Sequence decode_upsample(const Sequence& features, const Stage2Params& params);

struct Stage2Result {
    Sequence x;
    Sequence delta;
};

Stage2Result stage2_forward(const Sequence& z, const Stage2Params& params);

}  // namespace hdrseq
