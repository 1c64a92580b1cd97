#include "demcorrect/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "demcorrect/errors.hpp"
#include "demcorrect/numeric.hpp"

namespace demcorrect {

namespace fs = std::filesystem;

namespace {

bool is_gbdt(const std::string& model) { return model == kModelDepthwise || model == kModelLeafwise; }

template <class T>
T cfg_get(const Json& doc, const char* key, T fallback) {
    if (!doc.is_object() || !doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

double threshold_from(const Json& doc, const char* key, double fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc.at(key);
    if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw ConfigError(std::string("config field '") + key + "' must be a number or \"inf\"");
    return v.get<double>();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Json read_json(const fs::path& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_grid(const fs::path& path, const Grid& g) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_ascii_grid_file(path.string(), g);
}

Grid load_grid(const std::string& path, const char* role) {
    if (path.empty()) throw ConfigError(std::string("paths.") + role + " is not set");
    if (!fs::exists(path)) throw ConfigError(std::string("input raster for paths.") + role + " not found: '" + path + "'");
    return read_ascii_grid_file(path);
}

// Lazily loads inputs and derives the shared intermediate products so one
// command (or the bench) computes each of them once.
class Session {
public:
    explicit Session(const PipelineConfig& cfg) : Session(cfg, provenance(cfg)) {}
    Session(const PipelineConfig& cfg, Json prov) : cfg_(cfg), out_(cfg.paths.out_dir), prov_(std::move(prov)) {
        cfg_.validate();
    }

    const PipelineConfig& cfg() const { return cfg_; }
    const fs::path& out() const { return out_; }
    const Json& prov() const { return prov_; }

    const Grid& dem() { return cached(dem_, cfg_.paths.dem, "dem"); }
    const Grid& reference() { return cached(reference_, cfg_.paths.reference, "reference"); }
    const Grid& strata() { return cached(strata_, cfg_.paths.strata, "strata"); }

    const FeatureStack& stack() {
        if (!stack_) {
            const Grid bare = load_grid(cfg_.paths.bare, "bare");
            const Grid urban = load_grid(cfg_.paths.urban, "urban");
            const Grid forest = load_grid(cfg_.paths.forest, "forest");
            stack_ = build_feature_stack(dem(), bare, urban, forest, cfg_.terrain);
        }
        return *stack_;
    }

    const SplitResult& split() {
        if (!split_) {
            const Grid target = difference(dem(), reference());
            const Grid* strata_grid = cfg_.paths.strata.empty() ? nullptr : &strata();
            const auto table = extract_samples(stack(), target, strata_grid, cfg_.sampling.rate, cfg_.sampling.seed);
            split_ = demcorrect::split(table, cfg_.sampling.train_fraction, cfg_.sampling.seed,
                                       cfg_.sampling.stratified && strata_grid != nullptr);
        }
        return *split_;
    }

    const CollinearityReport& collinearity() {
        if (!collinearity_) collinearity_ = flag_collinear(split().train, cfg_.collinearity);
        return *collinearity_;
    }

private:
    const Grid& cached(std::optional<Grid>& slot, const std::string& path, const char* role) {
        if (!slot) slot = load_grid(path, role);
        return *slot;
    }

    PipelineConfig cfg_;
    fs::path out_;
    Json prov_;
    std::optional<Grid> dem_, reference_, strata_;
    std::optional<FeatureStack> stack_;
    std::optional<SplitResult> split_;
    std::optional<CollinearityReport> collinearity_;
};

FeaturesOutput run_features(Session& s) {
    const auto& stack = s.stack();
    Json layers = Json::array();
    for (std::size_t i = 0; i < stack.size(); ++i) {
        const auto file = stack.names()[i] + ".asc";
        const std::string text = write_ascii_grid_string(stack.layers()[i]);
        write_text(s.out() / "features" / file, text);
        layers.push_back({{"name", stack.names()[i]},
                          {"file", file},
                          {"valid_cells", stack.layers()[i].valid_count()},
                          {"checksum", "fnv1a64:" + hex_digest(text)}});
    }
    Json manifest = {{"names", stack.names()},
                     {"windows", to_json(s.cfg().terrain)},
                     {"layers", std::move(layers)},
                     {"provenance", s.prov()}};
    write_json(s.out() / "features" / "manifest.json", manifest);
    return {stack, std::move(manifest)};
}

DiagnoseOutput run_diagnose(Session& s) {
    const auto& sp = s.split();
    Json doc = to_json(s.collinearity());
    doc["train_rows"] = sp.train.size();
    doc["split_warnings"] = sp.warnings;
    doc["provenance"] = s.prov();
    write_json(s.out() / "collinearity.json", doc);
    return {sp.train, sp.test, s.collinearity()};
}

TrainOutput run_train(Session& s) {
    TrainOutput out;
    out.diagnostics = run_diagnose(s);
    const auto& train = out.diagnostics.train;
    {
        std::ostringstream a, b;
        write_samples_csv(a, train);
        write_samples_csv(b, out.diagnostics.test);
        write_text(s.out() / "samples_train.csv", a.str());
        write_text(s.out() / "samples_test.csv", b.str());
    }
    for (const auto& name : s.cfg().models) {
        Json doc;
        if (name == kModelMlr) {
            const auto& retained = out.diagnostics.report.retained;
            out.mlr = fit_ols(train, retained);
            doc = serialize_linear_model(*out.mlr);
            doc["excluded_features"] = out.diagnostics.report.flagged;
        } else {
            GbdtParams params = s.cfg().gbdt;
            params.growth = name == kModelDepthwise ? Growth::depthwise : Growth::leafwise;
            std::vector<double> history;
            auto model = fit_gbdt(train, params, &history);
            doc = serialize_model(model);
            out.train_rmse_history[name] = std::move(history);
            out.gbdt.emplace_back(name, std::move(model));
        }
        doc["provenance"] = s.prov();
        write_json(s.out() / "models" / (name + ".json"), doc);
        out.documents[name] = std::move(doc);
    }
    return out;
}

Grid predict_from_document(const Json& doc, const FeatureStack& stack) {
    const auto format = doc.is_object() && doc.contains("format") && doc["format"].is_string()
                            ? doc["format"].get<std::string>()
                            : std::string();
    if (format == kLinearFormat) return predict_error_grid(deserialize_linear_model(doc), stack);
    if (format == kGbdtFormat) return predict_error_grid(deserialize_model(doc), stack);
    throw FormatError("unrecognized model document format '" + format + "'");
}

CorrectOutput run_correct(Session& s, const std::vector<std::pair<std::string, Json>>& models) {
    CorrectOutput out;
    const bool have_reference = !s.cfg().paths.reference.empty();
    for (const auto& [name, doc] : models) {
        Grid dh = predict_from_document(doc, s.stack());
        Grid corrected = apply_correction(s.dem(), dh);
        write_grid(s.out() / "corrected" / (name + "_dh.asc"), dh);
        write_grid(s.out() / "corrected" / (name + "_dem.asc"), corrected);
        if (have_reference)
            write_grid(s.out() / "corrected" / (name + "_abs_error.asc"), abs_error_grid(corrected, s.reference()));
        out.predicted_dh.emplace_back(name, std::move(dh));
        out.corrected.emplace_back(name, std::move(corrected));
    }
    return out;
}

std::vector<std::pair<std::string, Json>> load_configured_models(const Session& s) {
    std::vector<std::pair<std::string, Json>> models;
    for (const auto& name : s.cfg().models) {
        const auto path = s.out() / "models" / (name + ".json");
        if (!fs::exists(path))
            throw ConfigError("model document '" + path.string() + "' not found; run 'train' first");
        models.emplace_back(name, read_json(path));
    }
    return models;
}

EvaluateOutput run_evaluate(Session& s, const CorrectOutput& corrected) {
    std::optional<Grid> mask;
    if (s.cfg().evaluate_on == "test") {
        mask.emplace(s.dem().geometry(), -1.0, 0.0);
        for (const auto& row : s.split().test.rows) (*mask)(row.row, row.col) = 1.0;
    }
    std::map<std::string, std::string> prov;
    prov["config_digest"] = s.prov()["config_digest"].get<std::string>();
    prov["tool_version"] = kToolVersion;
    prov["evaluated_cells"] = s.cfg().evaluate_on;
    for (const auto& name : s.cfg().models) {
        const auto path = s.out() / "models" / (name + ".json");
        if (fs::exists(path)) prov["model_digest:" + name] = "fnv1a64:" + hex_digest(read_text(path));
    }
    EvaluateOutput out;
    out.report = build_report(s.reference(), s.dem(), corrected.corrected, s.strata(), mask ? &*mask : nullptr,
                              std::move(prov));
    out.table = render_table(out.report);
    write_json(s.out() / "report.json", to_json(out.report));
    write_text(s.out() / "report.txt", out.table);
    return out;
}

}  // namespace

void PipelineConfig::validate() const {
    if (models.empty()) throw ConfigError("at least one model must be selected");
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& m = models[i];
        if (m != kModelMlr && !is_gbdt(m))
            throw ConfigError("unknown model '" + m + "' (expected mlr, gbdt-depthwise, gbdt-leafwise)");
        if (std::find(models.begin(), models.begin() + static_cast<std::ptrdiff_t>(i), m) !=
            models.begin() + static_cast<std::ptrdiff_t>(i))
            throw ConfigError("model '" + m + "' selected twice");
    }
    if (evaluate_on != "test" && evaluate_on != "all") throw ConfigError("evaluate_on must be 'test' or 'all'");
    if (paths.out_dir.empty()) throw ConfigError("paths.out_dir must be set");
    try {
        terrain.validate();
        gbdt.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (!(sampling.rate > 0.0 && sampling.rate <= 1.0)) throw ConfigError("sampling.rate must lie in (0, 1]");
    if (!(sampling.train_fraction > 0.0 && sampling.train_fraction < 1.0))
        throw ConfigError("sampling.train_fraction must lie in (0, 1)");
    if (bench.scenario != "nonlinear" && bench.scenario != "linear")
        throw ConfigError("bench.scenario must be 'nonlinear' or 'linear'");
}

PipelineConfig config_from_json(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
    PipelineConfig c;
    if (doc.contains("paths")) {
        const auto& p = doc["paths"];
        c.paths.dem = cfg_get(p, "dem", c.paths.dem);
        c.paths.reference = cfg_get(p, "reference", c.paths.reference);
        c.paths.bare = cfg_get(p, "bare", c.paths.bare);
        c.paths.urban = cfg_get(p, "urban", c.paths.urban);
        c.paths.forest = cfg_get(p, "forest", c.paths.forest);
        c.paths.strata = cfg_get(p, "strata", c.paths.strata);
        c.paths.out_dir = cfg_get(p, "out_dir", c.paths.out_dir);
    }
    try {
        if (doc.contains("terrain")) c.terrain = terrain_config_from_json(doc["terrain"]);
        if (doc.contains("gbdt")) c.gbdt = gbdt_params_from_json(doc["gbdt"], c.gbdt);
        if (doc.contains("bench") && doc["bench"].contains("error_spec"))
            c.bench.error_spec = error_spec_from_json(doc["bench"]["error_spec"]);
    } catch (const FormatError& e) {
        throw ConfigError(e.what());
    }
    if (doc.contains("collinearity")) {
        c.collinearity.r_abs = threshold_from(doc["collinearity"], "r_abs", c.collinearity.r_abs);
        c.collinearity.vif = threshold_from(doc["collinearity"], "vif", c.collinearity.vif);
    }
    c.models = cfg_get(doc, "models", c.models);
    if (doc.contains("sampling")) {
        const auto& s = doc["sampling"];
        c.sampling.rate = cfg_get(s, "rate", c.sampling.rate);
        c.sampling.train_fraction = cfg_get(s, "train_fraction", c.sampling.train_fraction);
        c.sampling.seed = cfg_get(s, "seed", c.sampling.seed);
        c.sampling.stratified = cfg_get(s, "stratified", c.sampling.stratified);
    }
    c.evaluate_on = cfg_get(doc, "evaluate_on", c.evaluate_on);
    if (doc.contains("bench")) {
        const auto& b = doc["bench"];
        c.bench.size_exponent = cfg_get(b, "size_exponent", c.bench.size_exponent);
        c.bench.base_height = cfg_get(b, "base_height", c.bench.base_height);
        c.bench.relief_amplitude = cfg_get(b, "relief_amplitude", c.bench.relief_amplitude);
        c.bench.roughness_decay = cfg_get(b, "roughness_decay", c.bench.roughness_decay);
        c.bench.cellsize = cfg_get(b, "cellsize", c.bench.cellsize);
        c.bench.seed = cfg_get(b, "seed", c.bench.seed);
        c.bench.scenario = cfg_get(b, "scenario", c.bench.scenario);
        if (b.contains("noise_fraction")) c.bench.noise_fraction = cfg_get(b, "noise_fraction", 0.0);
    }
    return c;
}

Json to_json(const PipelineConfig& c) {
    Json bench = {{"size_exponent", c.bench.size_exponent},
                  {"base_height", c.bench.base_height},
                  {"relief_amplitude", c.bench.relief_amplitude},
                  {"roughness_decay", c.bench.roughness_decay},
                  {"cellsize", c.bench.cellsize},
                  {"seed", c.bench.seed},
                  {"scenario", c.bench.scenario}};
    if (c.bench.noise_fraction) bench["noise_fraction"] = *c.bench.noise_fraction;
    if (c.bench.error_spec) bench["error_spec"] = to_json(*c.bench.error_spec);
    return {{"paths",
             {{"dem", c.paths.dem},
              {"reference", c.paths.reference},
              {"bare", c.paths.bare},
              {"urban", c.paths.urban},
              {"forest", c.paths.forest},
              {"strata", c.paths.strata},
              {"out_dir", c.paths.out_dir}}},
            {"terrain", to_json(c.terrain)},
            {"collinearity", {{"r_abs", real_or_inf(c.collinearity.r_abs)}, {"vif", real_or_inf(c.collinearity.vif)}}},
            {"models", c.models},
            {"gbdt", to_json(c.gbdt)},
            {"sampling",
             {{"rate", c.sampling.rate},
              {"train_fraction", c.sampling.train_fraction},
              {"seed", c.sampling.seed},
              {"stratified", c.sampling.stratified}}},
            {"evaluate_on", c.evaluate_on},
            {"bench", std::move(bench)}};
}

Json provenance(const PipelineConfig& cfg) {
    Json doc = to_json(cfg);
    doc["paths"].erase("out_dir");
    return {{"tool", "demcorrect"},
            {"version", kToolVersion},
            {"config_digest", "fnv1a64:" + hex_digest(doc.dump())},
            {"modules",
             {{"grid_io", 1},
              {"terrain_features", 1},
              {"dataset", 1},
              {"linear_stats", 1},
              {"gbdt_engine", kModelFormatVersion},
              {"correction_eval", 1},
              {"synth_bench", 1},
              {"cli_workflow", 1}}}};
}

ErrorSpec scenario_error_spec(const std::string& scenario, std::uint64_t seed) {
    ErrorSpec spec;
    spec.seed = seed;
    if (scenario == "nonlinear") {
        spec.linear_terms = {{"slope", 1.0}, {"pct_forest", 1.5}};
        spec.nonlinear_terms = {{"elevation", TermKind::sine, 3.0, 2.5, ""}, {"urban", TermKind::step, 4.0, 0.0, ""}};
    } else if (scenario == "linear") {
        spec.linear_terms = {{"elevation", 2.0}, {"pct_forest", 1.5}, {"pct_bare", -1.0}, {"urban", 1.0}};
    } else {
        throw ConfigError("unknown bench scenario '" + scenario + "'");
    }
    return spec;
}

FeaturesOutput cmd_features(const PipelineConfig& cfg) {
    Session s(cfg);
    return run_features(s);
}

DiagnoseOutput cmd_diagnose(const PipelineConfig& cfg) {
    Session s(cfg);
    return run_diagnose(s);
}

TrainOutput cmd_train(const PipelineConfig& cfg) {
    Session s(cfg);
    return run_train(s);
}

CorrectOutput cmd_correct(const PipelineConfig& cfg, const std::optional<std::string>& model_file) {
    Session s(cfg);
    if (model_file) {
        if (!fs::exists(*model_file)) throw ConfigError("model document '" + *model_file + "' not found");
        return run_correct(s, {{fs::path(*model_file).stem().string(), read_json(*model_file)}});
    }
    return run_correct(s, load_configured_models(s));
}

EvaluateOutput cmd_evaluate(const PipelineConfig& cfg) {
    Session s(cfg);
    const auto corrected = run_correct(s, load_configured_models(s));
    return run_evaluate(s, corrected);
}

BenchOutput cmd_bench(const PipelineConfig& cfg) {
    cfg.validate();
    const auto& b = cfg.bench;
    const fs::path out(cfg.paths.out_dir);
    const fs::path inputs = out / "inputs";

    const Grid reference = fractal_dem(b.size_exponent, b.base_height, b.relief_amplitude, b.roughness_decay, b.seed,
                                       b.cellsize);
    const Landcover lc = synth_landcover(reference, b.seed + 1);
    const FeatureStack clean = build_feature_stack(reference, lc.bare, lc.urban, lc.forest, cfg.terrain);

    ErrorSpec spec = b.error_spec ? *b.error_spec : scenario_error_spec(b.scenario, b.seed + 2);
    const double noise_fraction = b.noise_fraction.value_or(b.scenario == "linear" ? 0.02 : 0.1);
    if (!b.error_spec || b.noise_fraction) {
        ErrorSpec noiseless = spec;
        noiseless.noise_std = 0.0;
        const auto probe = inject_error(reference, clean, noiseless);
        std::vector<double> dh;
        for (std::size_t i = 0; i < probe.true_dh.size(); ++i)
            if (probe.true_dh.valid(i)) dh.push_back(probe.true_dh[i]);
        spec.noise_std = dh.size() > 1 ? noise_fraction * compute_metrics(dh).std : 0.0;
    }
    const InjectedError injected = inject_error(reference, clean, spec);

    write_grid(inputs / "dem.asc", injected.degraded);
    write_grid(inputs / "reference.asc", reference);
    write_grid(inputs / "bare.asc", lc.bare);
    write_grid(inputs / "urban.asc", lc.urban);
    write_grid(inputs / "forest.asc", lc.forest);
    write_grid(inputs / "strata.asc", lc.strata);
    write_grid(inputs / "true_dh.asc", injected.true_dh);
    write_json(inputs / "error_spec.json", to_json(spec));

    PipelineConfig run = cfg;
    run.paths.dem = (inputs / "dem.asc").string();
    run.paths.reference = (inputs / "reference.asc").string();
    run.paths.bare = (inputs / "bare.asc").string();
    run.paths.urban = (inputs / "urban.asc").string();
    run.paths.forest = (inputs / "forest.asc").string();
    run.paths.strata = (inputs / "strata.asc").string();

    // Provenance must not depend on where the run writes, so it is taken from
    // the caller's config rather than the rewritten input paths.
    Session s(run, provenance(cfg));
    BenchOutput result;
    run_features(s);
    result.training = run_train(s);
    std::vector<std::pair<std::string, Json>> docs;
    for (const auto& name : run.models) docs.emplace_back(name, result.training.documents.at(name));
    const auto corrected = run_correct(s, docs);
    result.evaluation = run_evaluate(s, corrected);
    result.true_dh = injected.true_dh;
    return result;
}

}  // namespace demcorrect
