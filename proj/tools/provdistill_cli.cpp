#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "provdistill/pipeline.hpp"

using namespace provdistill;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string workdir;
    std::optional<uint64_t> seed;
    bool verbose = false;

    // Stage-cell selection for distill/train/detect/eval.
    std::string method;
    std::optional<double> rate;
};

PipelineConfig resolve_config(const GlobalOpts& g) {
    PipelineConfig cfg;
    if (!g.config_path.empty()) cfg = load_pipeline_config(g.config_path);
    if (!g.workdir.empty()) cfg.workdir = g.workdir;
    else if (g.config_path.empty()) {
        if (const char* env = std::getenv("PROVDISTILL_WORKDIR")) cfg.workdir = env;
    }
    if (g.workdir.empty() && !g.config_path.empty()) {
        // Config gave a workdir; env var only fills the gap when it did not.
        if (cfg.workdir == "run")
            if (const char* env = std::getenv("PROVDISTILL_WORKDIR")) cfg.workdir = env;
    }
    if (g.seed) apply_seed_override(cfg, *g.seed);
    if (g.verbose) cfg.verbose = true;
    return cfg;
}

std::string resolve_label(const GlobalOpts& g, const PipelineConfig& cfg) {
    const std::string method = g.method.empty() ? cfg.methods.at(0) : g.method;
    if (method == "full") return "full";
    const double r = g.rate ? *g.rate : cfg.rates.at(0);
    return cell_label(method, r);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"provenance-graph distillation pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "pipeline config JSON");
    app.add_option("--workdir", g.workdir, "working directory (default: $PROVDISTILL_WORKDIR)");
    app.add_option("--seed", g.seed, "override every stage seed");
    app.add_flag("--verbose", g.verbose, "log stage progress to stderr");

    auto* synth = app.add_subcommand("synth", "generate synthetic audit logs");
    auto* ingest = app.add_subcommand("ingest", "parse logs and build provenance graphs");
    auto* featurize = app.add_subcommand("featurize", "train embedding and emit node features");
    auto* distill = app.add_subcommand("distill", "condense the benign training graph");
    auto* train = app.add_subcommand("train", "train the node-type classifier");
    auto* detect = app.add_subcommand("detect", "flag type-misclassified nodes");
    auto* eval = app.add_subcommand("eval", "score detection against ground truth");
    auto* pipeline = app.add_subcommand("pipeline", "run every stage for all methods and rates");

    for (auto* sub : {distill, train, detect, eval}) {
        sub->add_option("--method", g.method, "distillation method (or 'full')");
        sub->add_option("--r", g.rate, "reduction rate");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        const PipelineConfig cfg = resolve_config(g);
        if (synth->parsed()) {
            stage_synth(cfg);
        } else if (ingest->parsed()) {
            stage_ingest(cfg);
        } else if (featurize->parsed()) {
            stage_featurize(cfg);
        } else if (distill->parsed()) {
            const std::string method = g.method.empty() ? cfg.methods.at(0) : g.method;
            stage_distill(cfg, method, g.rate ? *g.rate : cfg.rates.at(0));
        } else if (train->parsed()) {
            stage_train(cfg, resolve_label(g, cfg));
        } else if (detect->parsed()) {
            stage_detect(cfg, resolve_label(g, cfg));
        } else if (eval->parsed()) {
            stage_eval(cfg, resolve_label(g, cfg));
        } else if (pipeline->parsed()) {
            const ComparisonTable table = run_pipeline(cfg);
            std::cout << table.to_text();
        }
    } catch (const Error& e) {
        std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
