#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "demcorrect/correction.hpp"
#include "demcorrect/dataset.hpp"
#include "demcorrect/gbdt.hpp"
#include "demcorrect/linear_stats.hpp"
#include "demcorrect/serialization.hpp"
#include "demcorrect/synth.hpp"
#include "demcorrect/terrain.hpp"

namespace demcorrect {

inline constexpr const char* kToolVersion = "1.0.0";

inline constexpr const char* kModelMlr = "mlr";
inline constexpr const char* kModelDepthwise = "gbdt-depthwise";
inline constexpr const char* kModelLeafwise = "gbdt-leafwise";

struct PipelinePaths {
    std::string dem;        ///< DEM to correct
    std::string reference;  ///< trusted surface (training and evaluation)
    std::string bare;
    std::string urban;
    std::string forest;
    std::string strata;
    std::string out_dir = "out";
};

struct SamplingConfig {
    double rate = 1.0;
    double train_fraction = 0.8;
    std::uint64_t seed = 42;
    bool stratified = true;
};

/// Synthetic run settings. `scenario` picks a preset error model ("nonlinear"
/// or "linear") unless `error_spec` is set. When noise_fraction is set, the
/// noise std is that fraction of the noiseless error's std.
struct BenchConfig {
    int size_exponent = 8;
    double base_height = 500.0;
    double relief_amplitude = 300.0;
    double roughness_decay = 0.5;
    double cellsize = 30.0;
    std::uint64_t seed = 42;
    std::string scenario = "nonlinear";
    std::optional<ErrorSpec> error_spec;
    std::optional<double> noise_fraction;
};

struct PipelineConfig {
    PipelinePaths paths;
    TerrainConfig terrain;
    CollinearityThresholds collinearity;
    std::vector<std::string> models = {kModelMlr, kModelDepthwise, kModelLeafwise};
    GbdtParams gbdt;
    SamplingConfig sampling;
    std::string evaluate_on = "test";  ///< "test" cells of the split, or "all"
    BenchConfig bench;

    /// Throws ConfigError.
    void validate() const;
};

PipelineConfig config_from_json(const Json& doc);
Json to_json(const PipelineConfig& cfg);

/// Preset error models for the synthetic benchmark.
ErrorSpec scenario_error_spec(const std::string& scenario, std::uint64_t seed);

/// Tool version, per-module format versions, and a digest of the configuration
/// (output directory excluded).
Json provenance(const PipelineConfig& cfg);

struct FeaturesOutput {
    FeatureStack stack;
    Json manifest;
};

struct DiagnoseOutput {
    SampleTable train;
    SampleTable test;
    CollinearityReport report;
};

struct TrainOutput {
    DiagnoseOutput diagnostics;
    std::optional<LinearModel> mlr;
    std::vector<std::pair<std::string, GbdtModel>> gbdt;
    std::map<std::string, std::vector<double>> train_rmse_history;
    std::map<std::string, Json> documents;
};

struct CorrectOutput {
    std::vector<NamedGrid> predicted_dh;
    std::vector<NamedGrid> corrected;
};

struct EvaluateOutput {
    EvaluationReport report;
    std::string table;
};

struct BenchOutput {
    TrainOutput training;
    EvaluateOutput evaluation;
    Grid true_dh;
};

// Each command reads its inputs from cfg.paths and writes under
// cfg.paths.out_dir:
//   features  features/<name>.asc, features/manifest.json
//   diagnose  collinearity.json
//   train     collinearity.json, models/<model>.json, samples_{train,test}.csv
//   correct   corrected/<model>_{dh,dem,abs_error}.asc
//   evaluate  report.json, report.txt
//   bench     inputs/*.asc + error_spec.json, then all of the above
FeaturesOutput cmd_features(const PipelineConfig& cfg);
DiagnoseOutput cmd_diagnose(const PipelineConfig& cfg);
TrainOutput cmd_train(const PipelineConfig& cfg);
/// Corrects with `model_file` when given, otherwise with every configured
/// model found under out_dir/models.
CorrectOutput cmd_correct(const PipelineConfig& cfg, const std::optional<std::string>& model_file = std::nullopt);
EvaluateOutput cmd_evaluate(const PipelineConfig& cfg);
BenchOutput cmd_bench(const PipelineConfig& cfg);

}  // namespace demcorrect
