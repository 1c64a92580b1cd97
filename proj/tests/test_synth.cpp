#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "demcorrect/errors.hpp"
#include "demcorrect/landscape.hpp"
#include "demcorrect/synth.hpp"
#include "demcorrect/terrain.hpp"

using namespace demcorrect;

namespace {

FeatureStack stack_for(const Grid& dem, const Landcover& lc) {
    TerrainConfig cfg;
    cfg.texture = {3, 1.0};
    return build_feature_stack(dem, lc.bare, lc.urban, lc.forest, cfg);
}

}  // namespace

TEST(FractalDem, SizeAndDeterminism) {
    const Grid a = fractal_dem(8, 500, 300, 0.5, 42);
    EXPECT_EQ(a.nrows(), 257u);
    EXPECT_EQ(a.ncols(), 257u);
    EXPECT_EQ(a.valid_count(), a.size());
    EXPECT_EQ(a, fractal_dem(8, 500, 300, 0.5, 42));
    EXPECT_NE(a, fractal_dem(8, 500, 300, 0.5, 43));
}

TEST(FractalDem, ZeroReliefIsConstant) {
    const Grid g = fractal_dem(5, 123.5, 0.0, 0.5, 7);
    for (double v : g.values()) EXPECT_EQ(v, 123.5);
}

TEST(FractalDem, RejectsBadArguments) {
    EXPECT_THROW(fractal_dem(0, 0, 1, 0.5, 1), DomainError);
    EXPECT_THROW(fractal_dem(5, 0, -1, 0.5, 1), DomainError);
}

TEST(SynthLandcover, MasksBinaryAndStrataComplete) {
    const Grid dem = fractal_dem(7, 500, 300, 0.5, 3);
    const Landcover lc = synth_landcover(dem, 3);
    for (const Grid* m : {&lc.bare, &lc.urban, &lc.forest})
        for (double v : m->values()) EXPECT_TRUE(v == 0.0 || v == 1.0);
    std::set<int> labels;
    for (double v : lc.strata.values()) {
        EXPECT_GE(v, 1.0);
        EXPECT_LE(v, 5.0);
        labels.insert(static_cast<int>(v));
    }
    EXPECT_EQ(labels.size(), 5u);
    const Landcover again = synth_landcover(dem, 3);
    EXPECT_EQ(again.bare, lc.bare);
    EXPECT_EQ(again.urban, lc.urban);
    EXPECT_EQ(again.forest, lc.forest);
    EXPECT_EQ(again.strata, lc.strata);
    EXPECT_NE(synth_landcover(dem, 4).urban, lc.urban);
}

TEST(InjectError, EmptySpecIsIdentity) {
    const Grid dem = fractal_dem(5, 500, 100, 0.5, 1);
    const Landcover lc = synth_landcover(dem, 1);
    const InjectedError e = inject_error(dem, stack_for(dem, lc), ErrorSpec{});
    EXPECT_EQ(e.degraded, dem);
    for (double v : e.true_dh.values()) EXPECT_EQ(v, 0.0);
}

TEST(InjectError, SingleLinearTermIsStandardizedLayer) {
    const Grid dem = fractal_dem(6, 500, 100, 0.5, 2);
    const FeatureStack stack = stack_for(dem, synth_landcover(dem, 2));
    ErrorSpec spec;
    spec.linear_terms = {{"slope", 1.0}};
    const InjectedError e = inject_error(dem, stack, spec);
    const Grid& s = stack.layer("slope");
    double mean = 0.0, n = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.valid(i)) {
            mean += s[i];
            n += 1.0;
        }
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.valid(i)) var += (s[i] - mean) * (s[i] - mean);
    const double sd = std::sqrt(var / n);
    for (std::size_t i = 0; i < s.size(); ++i) {
        ASSERT_EQ(e.true_dh.valid(i), s.valid(i));
        if (s.valid(i)) EXPECT_NEAR(e.true_dh[i], (s[i] - mean) / sd, 1e-9);
    }
}

TEST(InjectError, DifferenceRecoversTrueDhBitExactly) {
    const Grid dem = fractal_dem(6, 500, 300, 0.5, 5);
    const FeatureStack stack = stack_for(dem, synth_landcover(dem, 5));
    ErrorSpec spec;
    spec.linear_terms = {{"elevation", 2.0}, {"pct_forest", -1.0}};
    spec.nonlinear_terms = {{"slope", TermKind::sine, 3.0, 2.0, ""}, {"urban", TermKind::step, 4.0, 0.0, ""},
                            {"tpi", TermKind::product, 0.5, 1.0, "tri"}};
    spec.noise_std = 0.7;
    spec.seed = 9;
    const InjectedError e = inject_error(dem, stack, spec);
    const Grid d = difference(e.degraded, dem);
    for (std::size_t i = 0; i < d.size(); ++i) {
        ASSERT_EQ(d.valid(i), e.true_dh.valid(i));
        if (d.valid(i)) EXPECT_EQ(d[i], e.true_dh[i]);
    }
    EXPECT_EQ(inject_error(dem, stack, spec).true_dh, e.true_dh);
    spec.seed = 10;
    EXPECT_NE(inject_error(dem, stack, spec).true_dh, e.true_dh);
}

TEST(InjectError, UnknownFeatureIsDomainError) {
    const Grid dem = fractal_dem(4, 500, 100, 0.5, 1);
    ErrorSpec spec;
    spec.linear_terms = {{"curvature", 1.0}};
    EXPECT_THROW(inject_error(dem, stack_for(dem, synth_landcover(dem, 1)), spec), DomainError);
}

TEST(Landscape, Names) {
    EXPECT_EQ(landscape_name(1), "Urban/industrial");
    EXPECT_EQ(landscape_name(5), "Grassland/shrubland");
}
