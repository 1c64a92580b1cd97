#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "demcorrect/serialization.hpp"
#include "workspace.hpp"

using workspace::fs::path;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = demcorrect::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> input_flags(const demcorrect::PipelineConfig& c) {
    return {"--dem",    c.paths.dem,    "--reference", c.paths.reference, "--bare",   c.paths.bare,
            "--urban",  c.paths.urban,  "--forest",    c.paths.forest,    "--strata", c.paths.strata,
            "--out",    c.paths.out_dir};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

auto wavy() {
    return [](double z, std::size_t i) { return 0.01 * z + std::sin(static_cast<double>(i) * 0.37); };
}

}  // namespace

TEST(Cli, HelpExitsZero) {
    const Result r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("bench"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"transmogrify"}).code, 2);
    EXPECT_EQ(run({"features", "--rate", "lots"}).code, 2);
}

TEST(Cli, MissingMaskExitsTwoNamingPath) {
    const path dir = workspace::scratch();
    auto cfg = workspace::inputs(dir, 4, wavy());
    cfg.paths.urban = (dir / "nowhere" / "urban.asc").string();
    const Result r = run(concat({"features"}, input_flags(cfg)));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find((dir / "nowhere" / "urban.asc").string()), std::string::npos);
}

TEST(Cli, InvalidConfigValuesExitTwo) {
    const path dir = workspace::scratch();
    const auto cfg = workspace::inputs(dir, 4, wavy());
    EXPECT_EQ(run(concat({"train", "--model", "svm"}, input_flags(cfg))).code, 2);
    EXPECT_EQ(run(concat({"train", "--train-fraction", "1.5"}, input_flags(cfg))).code, 2);
    workspace::spit(dir / "broken.json", "{ not json");
    EXPECT_EQ(run({"features", "--config", (dir / "broken.json").string()}).code, 2);
}

TEST(Cli, ConfigFileWithFlagOverrides) {
    const path dir = workspace::scratch();
    auto cfg = workspace::inputs(dir, 5, wavy());
    cfg.models = {demcorrect::kModelDepthwise, demcorrect::kModelLeafwise};
    workspace::spit(dir / "config.json", demcorrect::to_json(cfg).dump(2));
    const Result r = run({"train", "--config", (dir / "config.json").string(), "--model", "mlr", "--n-trees", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(workspace::fs::exists(dir / "out" / "models" / "mlr.json"));
    EXPECT_FALSE(workspace::fs::exists(dir / "out" / "models" / "gbdt-depthwise.json"));

    const Result r2 = run({"train", "--config", (dir / "config.json").string(), "--n-trees", "3"});
    ASSERT_EQ(r2.code, 0) << r2.err;
    const auto doc = demcorrect::Json::parse(workspace::slurp(dir / "out" / "models" / "gbdt-depthwise.json"));
    EXPECT_LE(doc["trees"].size(), 3u);
    EXPECT_EQ(doc["params"]["n_trees"], 3);
}

TEST(Cli, FullWorkflow) {
    const path dir = workspace::scratch();
    const auto cfg = workspace::inputs(dir, 5, wavy());
    const auto flags = concat(input_flags(cfg), {"--n-trees", "10", "--seed", "3"});
    for (const char* cmd : {"features", "diagnose", "train", "correct"}) {
        const Result r = run(concat({cmd}, flags));
        ASSERT_EQ(r.code, 0) << cmd << ": " << r.err;
    }
    const Result ev = run(concat({"evaluate"}, flags));
    ASSERT_EQ(ev.code, 0) << ev.err;
    EXPECT_NE(ev.out.find("Percentage reduction in RMSE"), std::string::npos);
    for (const char* f : {"features/manifest.json", "collinearity.json", "models/mlr.json", "samples_train.csv",
                          "corrected/gbdt-leafwise_abs_error.asc", "report.json", "report.txt"})
        EXPECT_TRUE(workspace::fs::exists(dir / "out" / f)) << f;

    const Result one = run(concat({"correct", "--model-file", (dir / "out" / "models" / "mlr.json").string()}, flags));
    EXPECT_EQ(one.code, 0) << one.err;
}

TEST(Cli, SmallBench) {
    const path dir = workspace::scratch();
    const Result r = run({"bench", "--size-exponent", "6", "--n-trees", "5", "--out", (dir / "bench").string(),
                          "--threads", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(workspace::fs::exists(dir / "bench" / "inputs" / "true_dh.asc"));
    EXPECT_TRUE(workspace::fs::exists(dir / "bench" / "report.json"));
}
