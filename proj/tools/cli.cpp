#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "demcorrect/errors.hpp"
#include "demcorrect/parallel.hpp"
#include "demcorrect/pipeline.hpp"

namespace demcorrect::cli {

namespace {

struct Overrides {
    std::string config;
    std::vector<std::string> models;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, dem, reference, bare, urban, forest, strata;
    std::optional<double> rate, train_fraction, learning_rate, lambda, min_gain, vif_threshold, r_threshold;
    std::optional<int> n_trees, max_depth, max_leaves, min_samples_leaf, size_exponent;
    std::optional<std::string> evaluate_on, scenario, model_file;
    bool no_stratify = false;
    std::optional<std::size_t> threads;
};

PipelineConfig load_config(const Overrides& o) {
    PipelineConfig cfg;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw ConfigError("cannot open config '" + o.config + "'");
        Json doc;
        try {
            doc = Json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("config '" + o.config + "': " + e.what());
        }
        cfg = config_from_json(doc);
    }
    auto set = [](auto& dst, const auto& src) {
        if (src) dst = *src;
    };
    set(cfg.paths.out_dir, o.out);
    set(cfg.paths.dem, o.dem);
    set(cfg.paths.reference, o.reference);
    set(cfg.paths.bare, o.bare);
    set(cfg.paths.urban, o.urban);
    set(cfg.paths.forest, o.forest);
    set(cfg.paths.strata, o.strata);
    if (!o.models.empty()) cfg.models = o.models;
    if (o.seed) {
        cfg.sampling.seed = *o.seed;
        cfg.gbdt.seed = *o.seed;
        cfg.bench.seed = *o.seed;
    }
    set(cfg.sampling.rate, o.rate);
    set(cfg.sampling.train_fraction, o.train_fraction);
    if (o.no_stratify) cfg.sampling.stratified = false;
    set(cfg.gbdt.n_trees, o.n_trees);
    set(cfg.gbdt.learning_rate, o.learning_rate);
    set(cfg.gbdt.max_depth, o.max_depth);
    set(cfg.gbdt.max_leaves, o.max_leaves);
    set(cfg.gbdt.min_samples_leaf, o.min_samples_leaf);
    set(cfg.gbdt.lambda, o.lambda);
    set(cfg.gbdt.min_gain, o.min_gain);
    set(cfg.collinearity.vif, o.vif_threshold);
    set(cfg.collinearity.r_abs, o.r_threshold);
    set(cfg.evaluate_on, o.evaluate_on);
    set(cfg.bench.scenario, o.scenario);
    set(cfg.bench.size_exponent, o.size_exponent);
    cfg.validate();
    return cfg;
}

void add_common(CLI::App& app, Overrides& o) {
    app.add_option("--config", o.config, "JSON configuration document");
    app.add_option("--model", o.models, "Model to run: mlr, gbdt-depthwise, gbdt-leafwise (repeatable)");
    app.add_option("--seed", o.seed, "Seed for sampling, boosting and synthetic data");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--dem", o.dem, "DEM to correct (ESRI ASCII grid)");
    app.add_option("--reference", o.reference, "Reference surface (ESRI ASCII grid)");
    app.add_option("--bare", o.bare, "Bare-ground mask");
    app.add_option("--urban", o.urban, "Urban footprint mask");
    app.add_option("--forest", o.forest, "Forest mask");
    app.add_option("--strata", o.strata, "Landscape strata labels");
    app.add_option("--rate", o.rate, "Sampling rate in (0, 1]");
    app.add_option("--train-fraction", o.train_fraction, "Train share in (0, 1)");
    app.add_flag("--no-stratify", o.no_stratify, "Split without stratifying by landscape");
    app.add_option("--n-trees", o.n_trees, "Boosting rounds");
    app.add_option("--learning-rate", o.learning_rate, "Shrinkage in (0, 1]");
    app.add_option("--max-depth", o.max_depth, "Depthwise depth cap (0 = unlimited)");
    app.add_option("--max-leaves", o.max_leaves, "Leafwise leaf cap");
    app.add_option("--min-samples-leaf", o.min_samples_leaf, "Minimum rows per leaf");
    app.add_option("--lambda", o.lambda, "Leaf L2 regularization");
    app.add_option("--min-gain", o.min_gain, "Minimum split gain");
    app.add_option("--vif-threshold", o.vif_threshold, "VIF exclusion threshold");
    app.add_option("--r-threshold", o.r_threshold, "|r| threshold for correlation notes");
    app.add_option("--evaluate-on", o.evaluate_on, "Cells to evaluate: test or all");
    app.add_option("--scenario", o.scenario, "Bench error model: nonlinear or linear");
    app.add_option("--size-exponent", o.size_exponent, "Bench grid is (2^k + 1) cells square");
    app.add_option("--threads", o.threads, "Worker cap (overrides DEMCORRECT_THREADS)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Correct DEM vertical bias with linear regression or gradient-boosted trees", "demcorrect"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    add_common(app, o);

    auto* features = app.add_subcommand("features", "Compute the eleven predictor rasters");
    auto* diagnose = app.add_subcommand("diagnose", "Collinearity diagnostics on the training sample");
    auto* train = app.add_subcommand("train", "Fit the selected models");
    auto* correct = app.add_subcommand("correct", "Apply a model to the DEM");
    correct->add_option("--model-file", o.model_file, "Model document to apply");
    auto* evaluate = app.add_subcommand("evaluate", "Per-landscape RMSE report");
    auto* bench = app.add_subcommand("bench", "Synthetic end-to-end run");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "demcorrect: " << e.what() << '\n';
        return 2;
    }

    try {
        const PipelineConfig cfg = load_config(o);
        if (o.threads) set_thread_limit(*o.threads);
        const std::string dir = cfg.paths.out_dir;
        if (features->parsed()) {
            const auto r = cmd_features(cfg);
            out << "wrote " << r.stack.size() << " feature layers and manifest to " << dir << "/features\n";
        } else if (diagnose->parsed()) {
            const auto r = cmd_diagnose(cfg);
            out << "flagged:";
            for (const auto& f : r.report.flagged) out << ' ' << f;
            out << "\nwrote " << dir << "/collinearity.json\n";
        } else if (train->parsed()) {
            const auto r = cmd_train(cfg);
            for (const auto& [name, doc] : r.documents)
                out << name << ": " << doc["feature_names"].size() << " features -> " << dir << "/models/" << name
                    << ".json\n";
        } else if (correct->parsed()) {
            const auto r = cmd_correct(cfg, o.model_file);
            for (const auto& [name, g] : r.corrected) out << "corrected with " << name << " -> " << dir << "/corrected\n";
        } else if (evaluate->parsed()) {
            out << cmd_evaluate(cfg).table;
        } else if (bench->parsed()) {
            out << cmd_bench(cfg).evaluation.table;
        }
    } catch (const Error& e) {
        err << "demcorrect: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "demcorrect: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "demcorrect: internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace demcorrect::cli
