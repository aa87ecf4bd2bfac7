#pragma once

#include <cstdint>
#include <vector>

#include "hdrseq/datagen.hpp"
#include "hdrseq/layers.hpp"
#include "hdrseq/stage1.hpp"
#include "hdrseq/stage2.hpp"

namespace hdrseq {

struct Model {
    Stage1Params stage1;
    Stage2Params stage2;

    Model() = default;
    Model(const Stage1Config& s1, const Stage2Config& s2, std::uint64_t seed);

    // stage1.* then stage2.*; the order defines the checkpoint layout.
    ParamSet parameters() const;
};

struct WindowOutput {
    Sequence z;
    Sequence x;
};

// Stage 1 per schedule segment (each with its own anchor pair), then Stage 2
// over the whole window.
Sequence run_stage1(const Model& model, const std::vector<LdrInput>& backbone, const std::vector<AnchorPair>& anchors,
                    const CaptureSchedule& schedule, const Stage1Options& options = {});
WindowOutput run_window(const Model& model, const std::vector<LdrInput>& backbone,
                        const std::vector<AnchorPair>& anchors, const CaptureSchedule& schedule);

class Adam {
public:
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    Adam() = default;
    explicit Adam(const ParamSet& params);

    void step(const ParamSet& params, double lr);
    std::uint64_t steps() const { return t_; }

    // Moment buffers in parameter order.
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    void set_steps(std::uint64_t t) { t_ = t; }

private:
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::uint64_t t_ = 0;
};

// Cosine decay from lr_initial at step 0 to lr_final at max_steps.
double cosine_learning_rate(int step, int max_steps, double lr_initial, double lr_final);

}  // namespace hdrseq
