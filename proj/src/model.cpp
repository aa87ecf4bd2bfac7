#include "hdrseq/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hdrseq {

Model::Model(const Stage1Config& s1, const Stage2Config& s2, std::uint64_t seed) {
    Rng rng(seed);
    stage1 = Stage1Params(s1, rng);
    stage2 = Stage2Params(s2, rng);
}

ParamSet Model::parameters() const {
    ParamSet ps;
    ps.extend("stage1.", stage1.parameters());
    ps.extend("stage2.", stage2.parameters());
    return ps;
}

Sequence run_stage1(const Model& model, const std::vector<LdrInput>& backbone, const std::vector<AnchorPair>& anchors,
                    const CaptureSchedule& schedule, const Stage1Options& options) {
    const auto segments = schedule.segments();
    if (static_cast<int>(backbone.size()) != schedule.frames) {
        throw std::invalid_argument("run_stage1: backbone length does not match the schedule");
    }
    if (anchors.size() != segments.size()) throw std::invalid_argument("run_stage1: one anchor pair per segment");
    Sequence z;
    z.reserve(backbone.size());
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto& seg = segments[s];
        std::vector<LdrInput> part(backbone.begin() + seg.begin, backbone.begin() + seg.begin + seg.length);
        auto zs = stage1_forward(part, anchors[s].low, anchors[s].high, model.stage1, options);
        z.insert(z.end(), zs.begin(), zs.end());
    }
    return z;
}

WindowOutput run_window(const Model& model, const std::vector<LdrInput>& backbone,
                        const std::vector<AnchorPair>& anchors, const CaptureSchedule& schedule) {
    WindowOutput out;
    out.z = run_stage1(model, backbone, anchors, schedule);
    out.x = stage2_forward(out.z, model.stage2).x;
    return out;
}

Adam::Adam(const ParamSet& params) {
    for (const auto& [name, t] : params.entries()) {
        m_.emplace_back(t.numel(), 0.0);
        v_.emplace_back(t.numel(), 0.0);
    }
}

void Adam::step(const ParamSet& params, double lr) {
    if (params.entries().size() != m_.size()) throw std::logic_error("Adam: parameter set changed");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    std::size_t i = 0;
    for (const auto& [name, t] : params.entries()) {
        Tensor p = t;
        auto g = p.grad();
        auto w = p.mutable_values();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
            w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
        }
        ++i;
    }
}

double cosine_learning_rate(int step, int max_steps, double lr_initial, double lr_final) {
    if (max_steps <= 0) return lr_initial;
    const double progress = std::clamp(static_cast<double>(step) / max_steps, 0.0, 1.0);
    return lr_final + 0.5 * (lr_initial - lr_final) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace hdrseq
