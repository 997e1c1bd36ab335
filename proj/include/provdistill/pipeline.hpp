#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "provdistill/distill.hpp"
#include "provdistill/evalkit.hpp"
#include "provdistill/featurize.hpp"
#include "provdistill/gnn.hpp"
#include "provdistill/synthgen.hpp"

namespace provdistill {

// One JSON config document drives every stage; CLI flags override keys.
struct PipelineConfig {
    std::filesystem::path workdir = "run";
    bool verbose = false;

    SynthConfig synth{.n_processes = 400,
                      .n_files = 2400,
                      .n_sockets = 1200,
                      .benign_events = 40000,
                      .class_mix = {0.35, 0.2, 0.15, 0.15, 0.15},
                      .attack_chains = 3,
                      .chain_length = 13,
                      .seed = 11};
    // External logs disable the synth stage when set.
    std::optional<std::filesystem::path> logs_train;
    std::optional<std::filesystem::path> logs_eval;
    std::optional<std::filesystem::path> ground_truth;

    SkipgramConfig skipgram{};
    size_t max_sentence = kDefaultMaxSentence;

    DistillConfig distill{};
    std::vector<std::string> methods = {"random", "herding", "kcenter", "gcdm", "gcond"};
    std::vector<double> rates = {0.05};

    SageConfig gnn{};
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
void apply_seed_override(PipelineConfig& cfg, uint64_t seed);

// Stage artifact locations inside the workdir.
struct Paths {
    std::filesystem::path workdir;

    std::filesystem::path logs_train() const { return workdir / "logs_train.jsonl"; }
    std::filesystem::path logs_eval() const { return workdir / "logs_eval.jsonl"; }
    std::filesystem::path ground_truth() const { return workdir / "ground_truth.json"; }
    std::filesystem::path ingest_dir(const std::string& which) const {
        return workdir / ("ingest_" + which);
    }
    std::filesystem::path graph_dir(const std::string& which) const {
        return workdir / ("graph_" + which);
    }
    std::filesystem::path embedding() const { return workdir / "embedding.bin"; }
    std::filesystem::path features(const std::string& which) const {
        return workdir / ("features_" + which + ".bin");
    }
    std::filesystem::path distill_dir(const std::string& label) const {
        return workdir / "distill" / label;
    }
    std::filesystem::path model(const std::string& label) const {
        return workdir / "models" / (label + ".bin");
    }
    std::filesystem::path model_classes(const std::string& label) const {
        return workdir / "models" / (label + "_classes.json");
    }
    std::filesystem::path model_meta(const std::string& label) const {
        return workdir / "models" / (label + "_meta.json");
    }
    std::filesystem::path detect_dir(const std::string& label) const {
        return workdir / "detect" / label;
    }
    std::filesystem::path eval_metrics(const std::string& label) const {
        return workdir / "eval" / (label + "_metrics.json");
    }
    std::filesystem::path comparison_csv() const { return workdir / "comparison.csv"; }
    std::filesystem::path comparison_txt() const { return workdir / "comparison.txt"; }
    std::filesystem::path manifest(const std::string& stage) const {
        return workdir / "manifests" / (stage + ".json");
    }
    std::filesystem::path registry() const { return workdir / "manifests" / "artifacts.json"; }
};

std::string cell_label(const std::string& method, double r);

// Stages. Each verifies its inputs against recorded checksums, skips work
// when inputs, config, and outputs are unchanged, and records a manifest.
void stage_synth(const PipelineConfig& cfg);
void stage_ingest(const PipelineConfig& cfg);
void stage_featurize(const PipelineConfig& cfg);
void stage_distill(const PipelineConfig& cfg, const std::string& method, double r);
void stage_train(const PipelineConfig& cfg, const std::string& label);
void stage_detect(const PipelineConfig& cfg, const std::string& label);
void stage_eval(const PipelineConfig& cfg, const std::string& label);
ComparisonTable stage_compare(const PipelineConfig& cfg);

// All stages for the configured methods x rates plus the "full" baseline.
ComparisonTable run_pipeline(const PipelineConfig& cfg);

}  // namespace provdistill
