#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hdrseq/checkpoint.hpp"
#include "hdrseq/config.hpp"
#include "hdrseq/metrics.hpp"
#include "hdrseq/model.hpp"

namespace hdrseq {

struct TrainLogEntry {
    int step = 0;  // 1-based
    double lr = 0.0;
    double total = 0.0;
    double spatial = 0.0;
    double temporal = 0.0;
    double anchor = 0.0;
};

struct TrainOptions {
    bool write_files = true;     // checkpoints and train_log.tsv under paths.checkpoint_dir
    std::ostream* log = nullptr;  // human-readable progress, every train.log_every steps
};

struct TrainResult {
    Model model;
    Adam optimizer;
    std::vector<TrainLogEntry> log;
    std::filesystem::path final_checkpoint;
};

struct StepLosses {
    Tensor total, spatial, temporal, anchor;
};

// Forward pass of one training sample: Stage 1 on both anchor pairs, Stage 2 on pair (a).
StepLosses sample_losses(const Model& model, const TrainingSample& sample, const CaptureSchedule& schedule,
                         const RunConfig& config);

// Windows are ground-truth frame sequences at least schedule.t long.
TrainResult train(const RunConfig& config, const std::vector<std::vector<Frame>>& windows,
                  const TrainOptions& options = {});
// Loads every window listed in paths.data_manifest, then trains.
TrainResult train_from_manifest(const RunConfig& config, const TrainOptions& options = {});

enum class PredictionSource { full, stage1, ground_truth };
PredictionSource parse_prediction_source(const std::string& s);

struct EvalOptions {
    PredictionSource source = PredictionSource::full;
    std::uint64_t seed = 0;
};

// Splits each sequence into consecutive windows of schedule.t frames (the last
// one may be shorter), renders LDR inputs, and scores the reconstruction.
SequenceReport evaluate_frames(const Model& model, const RunConfig& config, const std::string& name,
                               const std::vector<Frame>& gt, const EvalOptions& options);

struct EvalResult {
    std::vector<SequenceReport> reports;
    SequenceReport aggregate;
    std::vector<std::string> errors;
};

EvalResult evaluate_manifest(const Model& model, const RunConfig& config, const std::filesystem::path& manifest,
                             const EvalOptions& options);
// report.tsv (header, one row per sequence, then the aggregate) plus <name>.kv per sequence.
void write_eval_outputs(const EvalResult& result, const std::filesystem::path& out_dir);

// Backbone frames mid_*.png, anchors low_*.png / high_*.png (one pair per
// window of schedule.t backbone frames). Writes frame_NNN.<format> and a
// tone-mapped frame_NNN.png preview per backbone frame.
std::vector<std::filesystem::path> infer_directory(const Model& model, const RunConfig& config,
                                                   const std::filesystem::path& frames_dir,
                                                   const std::filesystem::path& out_dir,
                                                   const std::string& format = "hdr");

// Writes gen.windows synthetic HDR windows plus manifest.txt, and an
// LDR example for infer under infer_example/.
std::filesystem::path generate_dataset(const RunConfig& config, const std::filesystem::path& out_dir);

// Runs the window-level pipeline and returns the Stage 1 or full output as frames.
std::vector<Frame> reconstruct(const Model& model, const CaptureSchedule& schedule, const std::vector<LdrInput>& backbone,
                               const std::vector<AnchorPair>& anchors, bool stage1_only = false);

}  // namespace hdrseq
