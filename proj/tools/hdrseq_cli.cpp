// Command-line front end: train, eval, infer, gen-data, plot.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "hdrseq/checkpoint.hpp"
#include "hdrseq/config.hpp"
#include "hdrseq/harness.hpp"
#include "hdrseq/plot.hpp"

namespace fs = std::filesystem;
using namespace hdrseq;

namespace {

void warn_on_hash_mismatch(const Checkpoint& ck, const std::string& config_path) {
    if (config_path.empty()) return;
    const RunConfig cfg = load_config(config_path);
    if (cfg.model_hash() != ck.model_hash) {
        std::cerr << "warning: config " << config_path << " model hash " << hash_hex(cfg.model_hash())
                  << " differs from checkpoint " << hash_hex(ck.model_hash) << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HDR video reconstruction from a mid-exposure stream plus sparse exposure anchors"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    auto* train = app.add_subcommand("train", "train a model from a config file");
    train->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
    train->add_option("--seed", seed, "overrides train.seed");

    std::string ckpt, data, out, source = "full", eval_config;
    std::uint64_t eval_seed = 0;
    auto* eval = app.add_subcommand("eval", "score a checkpoint on a dataset manifest");
    eval->add_option("--ckpt", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", data, "manifest of sequence directories")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", out, "report directory (default: the checkpoint's paths.report_dir)");
    eval->add_option("--source", source, "full | stage1 | gt")->check(CLI::IsMember({"full", "stage1", "gt"}));
    eval->add_option("--config", eval_config, "config to compare against the checkpoint's model hash");
    eval->add_option("--seed", eval_seed, "LDR rendering seed");

    std::string frames, format = "hdr";
    auto* infer = app.add_subcommand("infer", "reconstruct HDR frames from an LDR frame directory");
    infer->add_option("--ckpt", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    infer->add_option("--frames", frames, "directory with mid_*, low_*, high_* PNG frames")->required();
    infer->add_option("--out", out, "output directory")->required();
    infer->add_option("--format", format, "hdr | lcat")->check(CLI::IsMember({"hdr", "lcat"}));

    auto* gen = app.add_subcommand("gen-data", "write a synthetic HDR dataset");
    gen->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", out, "output directory")->required();

    std::string reports;
    auto* plot = app.add_subcommand("plot", "plot .kv reports");
    plot->add_option("--reports", reports, "glob of .kv report files")->required();
    plot->add_option("--out", out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            RunConfig cfg = load_config(config_path);
            if (seed) cfg.train.seed = seed;
            if (!cfg.train.seed) throw ConfigError("a seed is required: set train.seed or pass --seed");
            std::cout << "model hash " << hash_hex(cfg.model_hash()) << ", "
                      << Model(cfg.stage1, cfg.stage2, 0).parameters().count() << " parameters\n";
            const auto r = train_from_manifest(cfg, TrainOptions{true, &std::cout});
            std::cout << "wrote " << r.final_checkpoint.string() << "\n";
        } else if (*eval) {
            const Checkpoint ck = load_checkpoint(ckpt);
            warn_on_hash_mismatch(ck, eval_config);
            const auto result = evaluate_manifest(ck.model, ck.config, data,
                                                  EvalOptions{parse_prediction_source(source), eval_seed});
            write_eval_outputs(result, out.empty() ? ck.config.paths.report_dir : fs::path(out));
            for (const auto& e : result.errors) std::cerr << "note: " << e << "\n";
            std::cout << SequenceReport::table_header() << "\n";
            for (const auto& r : result.reports) std::cout << r.to_table_row() << "\n";
            std::cout << result.aggregate.to_table_row() << "\n";
        } else if (*infer) {
            const Checkpoint ck = load_checkpoint(ckpt);
            const auto written = infer_directory(ck.model, ck.config, frames, out, format);
            std::cout << "wrote " << written.size() << " frames to " << out << "\n";
        } else if (*gen) {
            const RunConfig cfg = load_config(config_path);
            std::cout << "wrote " << generate_dataset(cfg, out).string() << "\n";
        } else if (*plot) {
            const auto loaded = load_reports(reports);
            if (loaded.empty()) throw std::invalid_argument("no reports match " + reports);
            for (const auto& p : plot_reports(loaded, out)) std::cout << "wrote " << p.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
