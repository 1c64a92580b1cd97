#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "demcorrect/errors.hpp"
#include "demcorrect/parallel.hpp"
#include "demcorrect/terrain.hpp"
#include "oracles.hpp"

using namespace demcorrect;

namespace {

constexpr double kTol = 1e-9;

void expect_interior(const Grid& g, double expected, double tol = kTol, std::size_t border = 1) {
    for (std::size_t r = border; r + border < g.nrows(); ++r)
        for (std::size_t c = border; c + border < g.ncols(); ++c) {
            ASSERT_TRUE(g.valid(r, c)) << r << "," << c;
            EXPECT_NEAR(g(r, c), expected, tol) << r << "," << c;
        }
}

Grid center_window(double center, double neighbor) {
    return oracle::grid(3, 3, {neighbor, neighbor, neighbor, neighbor, center, neighbor, neighbor, neighbor, neighbor});
}

Grid random_dem(std::uint64_t seed, std::size_t n = 24) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> v(0.0, 50.0);
    Grid g(GridGeometry{n, n, 1000.0, 2000.0, 10.0}, -9999.0, 0.0);
    for (auto& x : g.values()) x = v(rng);
    return g;
}

}  // namespace

TEST(Slope, FlatPlaneIsZero) {
    expect_interior(slope(oracle::plane(6, 1.0, [](double, double) { return 12.0; })), 0.0);
}

TEST(Slope, PlaneZEqualsXIs45Degrees) {
    expect_interior(slope(oracle::plane(6, 1.0, [](double x, double) { return x; })), 45.0);
}

TEST(Slope, PlaneThreeXPlusFourYIsAtanFive) {
    const Grid s = slope(oracle::plane(6, 1.0, [](double x, double y) { return 3 * x + 4 * y; }));
    expect_interior(s, std::atan(5.0) * 180.0 / std::numbers::pi);
    expect_interior(s, 78.69006752597979);
}

TEST(Slope, BorderAndNodataWindowsAreNodata) {
    Grid dem = oracle::plane(5, 1.0, [](double x, double) { return x; });
    dem(2, 2) = dem.nodata();
    const Grid s = slope(dem);
    EXPECT_FALSE(s.valid(0, 0));
    EXPECT_FALSE(s.valid(4, 2));
    for (std::size_t r = 1; r <= 3; ++r)
        for (std::size_t c = 1; c <= 3; ++c) EXPECT_FALSE(s.valid(r, c));
}

TEST(Aspect, FlatPlaneIsSentinel) {
    expect_interior(aspect(oracle::plane(5, 1.0, [](double, double) { return 3.0; })), kFlatAspect);
}

TEST(Aspect, RisingEastwardFacesWest) {
    expect_interior(aspect(oracle::plane(5, 1.0, [](double x, double) { return x; })), 270.0);
}

TEST(Aspect, RisingNorthwardFacesSouth) {
    expect_interior(aspect(oracle::plane(5, 1.0, [](double, double y) { return y; })), 180.0);
}

TEST(Aspect, CompassDirections) {
    expect_interior(aspect(oracle::plane(5, 1.0, [](double, double y) { return -y; })), 0.0);
    expect_interior(aspect(oracle::plane(5, 1.0, [](double x, double) { return -x; })), 90.0);
    expect_interior(aspect(oracle::plane(5, 1.0, [](double x, double y) { return x + y; })), 225.0);
}

TEST(Roughness, ConstantGridIsZero) {
    expect_interior(roughness(oracle::plane(5, 1.0, [](double, double) { return 7.0; }), {1, 1.0}), 0.0);
}

TEST(Roughness, OneToNineIsEight) {
    const Grid g = roughness(oracle::grid(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9}), {1, 1.0});
    EXPECT_EQ(g(1, 1), 8.0);
    EXPECT_FALSE(g.valid(0, 0));
}

TEST(Roughness, RangeOfMixedWindow) {
    EXPECT_EQ(roughness(oracle::grid(3, 3, {2, 7, 3, 4, 5, 6, 3, 3, 4}), {1, 1.0})(1, 1), 5.0);
}

TEST(Tpi, ConstantGridIsZero) {
    expect_interior(tpi(oracle::plane(5, 1.0, [](double, double) { return 123.456; }), {1, 1.0}), 0.0);
}

TEST(Tpi, CenterAboveNeighbors) {
    EXPECT_EQ(tpi(center_window(5, 1), {1, 1.0})(1, 1), 4.0);
}

TEST(Tpi, CenterBelowNeighborMean) {
    EXPECT_DOUBLE_EQ(tpi(oracle::grid(3, 3, {1, 3, 1, 3, 0, 3, 1, 3, 1}), {1, 1.0})(1, 1), -2.0);
}

TEST(Tri, ConstantGridIsZero) {
    expect_interior(tri(oracle::plane(5, 1.0, [](double, double) { return -40.0; })), 0.0);
}

TEST(Tri, RootEight) {
    EXPECT_NEAR(tri(center_window(1, 2))(1, 1), std::sqrt(8.0), kTol);
    EXPECT_NEAR(tri(center_window(1, 2))(1, 1), 2.8284271247461903, kTol);
}

TEST(Tri, SignInsensitive) {
    EXPECT_NEAR(tri(oracle::grid(3, 3, {1, -1, 1, -1, 0, -1, 1, -1, 1}))(1, 1), std::sqrt(8.0), kTol);
}

TEST(Texture, ConstantGridIsZero) {
    expect_interior(texture(oracle::plane(9, 1.0, [](double, double) { return 2.0; }), 0.5, {2, 1.0}), 0.0, kTol, 3);
}

TEST(Texture, SingleSpikeFlagsOneOfTwentyFive) {
    Grid g(GridGeometry{9, 9, 0, 0, 1}, -9999.0, 0.0);
    g(4, 4) = 10.0;
    EXPECT_NEAR(texture(g, 0.5, {2, 1.0})(4, 4), 4.0, kTol);
}

TEST(Texture, CheckerboardIsFullyFlagged) {
    Grid g(GridGeometry{9, 9, 0, 0, 1}, -9999.0, 0.0);
    for (std::size_t r = 0; r < 9; ++r)
        for (std::size_t c = 0; c < 9; ++c) g(r, c) = ((r + c) % 2 == 0) ? 1.0 : -1.0;
    expect_interior(texture(g, 0.5, {1, 1.0}), 100.0, kTol, 2);
}

TEST(Vrm, FlatAndTiltedPlanesAreZero) {
    expect_interior(vrm(oracle::plane(9, 1.0, [](double, double) { return 1.0; }), {1, 1.0}), 0.0, kTol, 2);
    expect_interior(vrm(oracle::plane(9, 1.0, [](double x, double y) { return 0.3 * x - 0.7 * y; }), {1, 1.0}), 0.0,
                    kTol, 2);
}

TEST(Vrm, TwoOrthogonalNormals) {
    const std::vector<Vec3> normals = {{0, 0, 1}, {1, 0, 0}};
    EXPECT_NEAR(vector_ruggedness(normals), 1.0 - std::sqrt(2.0) / 2.0, kTol);
    EXPECT_NEAR(vector_ruggedness(normals), 0.2928932188134524, kTol);
}

TEST(Vrm, SurfaceNormalComponents) {
    const Vec3 up = surface_normal(0.0, kFlatAspect);
    EXPECT_EQ(up.z, 1.0);
    const Vec3 east = surface_normal(90.0, 90.0);
    EXPECT_NEAR(east.x, 1.0, kTol);
    EXPECT_NEAR(east.y, 0.0, kTol);
    EXPECT_NEAR(east.z, 0.0, kTol);
}

TEST(FocalFraction, FullAndEmptyCover) {
    expect_interior(focal_fraction(Grid(GridGeometry{5, 5, 0, 0, 1}, -9999.0, 1.0), {1, 1.0}), 100.0);
    expect_interior(focal_fraction(Grid(GridGeometry{5, 5, 0, 0, 1}, -9999.0, 0.0), {1, 1.0}), 0.0);
}

TEST(FocalFraction, ThreeOfNine) {
    EXPECT_NEAR(focal_fraction(oracle::grid(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}), {1, 1.0})(1, 1), 100.0 / 3.0, kTol);
}

TEST(FocalFraction, NonBinaryMaskIsDomainError) {
    EXPECT_THROW(focal_fraction(oracle::grid(1, 2, {0, 0.5}), {1, 1.0}), DomainError);
}

TEST(WindowSpec, ValidityRule) {
    // 3x3 at a corner holds 4 of 9 in-bounds cells.
    const Grid ones(GridGeometry{4, 4, 0, 0, 1}, -9999.0, 1.0);
    EXPECT_FALSE(focal_fraction(ones, {1, 0.5}).valid(0, 0));
    EXPECT_TRUE(focal_fraction(ones, {1, 0.4}).valid(0, 0));
    EXPECT_THROW((WindowSpec{0, 1.0}.validate()), DomainError);
    EXPECT_THROW((WindowSpec{1, 1.5}.validate()), DomainError);
}

TEST(WindowSpec, NodataCenterIsNodata) {
    Grid g(GridGeometry{5, 5, 0, 0, 1}, -9999.0, 1.0);
    g(2, 2) = g.nodata();
    EXPECT_FALSE(roughness(g, {1, 0.1}).valid(2, 2));
    EXPECT_TRUE(roughness(g, {1, 0.5}).valid(2, 1));
}

TEST(FocalProperty, WindowIsolation) {
    // A focal result depends only on its window: recomputing at the center of
    // an extracted window gives the same value.
    const Grid dem = random_dem(5);
    const Grid full_rough = roughness(dem, {2, 1.0});
    const Grid full_tpi = tpi(dem, {2, 1.0});
    const Grid full_tri = tri(dem);
    for (std::size_t r = 2; r < 22; r += 3)
        for (std::size_t c = 2; c < 22; c += 4) {
            const Grid w = oracle::extract_window(dem, r, c, 2);
            EXPECT_EQ(roughness(w, {2, 1.0})(2, 2), full_rough(r, c));
            EXPECT_NEAR(tpi(w, {2, 1.0})(2, 2), full_tpi(r, c), 1e-12);
            EXPECT_EQ(tri(w)(2, 2), full_tri(r, c));
        }
}

TEST(FocalProperty, InvariantUnderElevationOffset) {
    const Grid dem = random_dem(11);
    Grid shifted = dem;
    for (auto& v : shifted.values()) v += 250.0;
    const auto close = [](const Grid& a, const Grid& b, double tol) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            ASSERT_EQ(a.valid(i), b.valid(i));
            if (a.valid(i)) EXPECT_NEAR(a[i], b[i], tol);
        }
    };
    close(slope(dem), slope(shifted), 1e-9);
    close(roughness(dem, {1, 1.0}), roughness(shifted, {1, 1.0}), 1e-9);
    close(tri(dem), tri(shifted), 1e-9);
    close(texture(dem, 1.0, {2, 1.0}), texture(shifted, 1.0, {2, 1.0}), 1e-9);
    close(vrm(dem, {1, 1.0}), vrm(shifted, {1, 1.0}), 1e-9);
}

TEST(FocalProperty, SlopeAspectInvariantUnderTranslation) {
    const Grid dem = random_dem(17);
    Grid moved(GridGeometry{dem.ncols(), dem.nrows(), -5e5, 7e6, dem.geometry().cellsize}, dem.nodata(), dem.values());
    EXPECT_EQ(slope(dem).values(), slope(moved).values());
    EXPECT_EQ(aspect(dem).values(), aspect(moved).values());
}

TEST(FocalProperty, RangesHold) {
    const Grid dem = random_dem(23);
    for (const Grid& g : {slope(dem)})
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.valid(i)) {
                EXPECT_GE(g[i], 0.0);
                EXPECT_LE(g[i], 90.0);
            }
    const Grid a = aspect(dem);
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.valid(i)) EXPECT_TRUE(a[i] == kFlatAspect || (a[i] >= 0.0 && a[i] < 360.0));
    const Grid v = vrm(dem, {1, 1.0});
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v.valid(i)) {
            EXPECT_GE(v[i], 0.0);
            EXPECT_LE(v[i], 1.0);
        }
    for (const Grid& g : {texture(dem, 1.0, {2, 1.0}), roughness(dem, {1, 1.0}), tri(dem)})
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.valid(i)) EXPECT_GE(g[i], 0.0);
}

TEST(FeatureStack, CanonicalNamesAndSharedGeometry) {
    const Grid dem = oracle::plane(12, 30.0, [](double, double) { return 100.0; });
    const Grid zeros(dem.geometry(), dem.nodata(), 0.0);
    const FeatureStack stack = build_feature_stack(dem, zeros, zeros, zeros, TerrainConfig{});
    ASSERT_EQ(stack.size(), 11u);
    for (std::size_t i = 0; i < 11; ++i) {
        EXPECT_EQ(stack.names()[i], kFeatureNames[i]);
        EXPECT_TRUE(same_geometry(stack.layers()[i].geometry(), dem.geometry()));
    }
}

TEST(FeatureStack, FlatDemWithZeroMasks) {
    const Grid dem = oracle::plane(25, 30.0, [](double, double) { return 100.0; });
    const Grid zeros(dem.geometry(), dem.nodata(), 0.0);
    TerrainConfig cfg;
    cfg.texture = {2, 1.0};
    const FeatureStack stack = build_feature_stack(dem, zeros, zeros, zeros, cfg);
    for (const char* name : {"slope", "tpi", "tri", "texture", "vrm", "roughness"}) {
        const Grid& g = stack.layer(name);
        std::size_t valid = 0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.valid(i)) {
                ++valid;
                EXPECT_EQ(g[i], 0.0) << name;
            }
        EXPECT_GT(valid, 0u) << name;
    }
    const Grid& a = stack.layer("aspect");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.valid(i)) EXPECT_EQ(a[i], kFlatAspect);
}

TEST(FeatureStack, RejectsDuplicatesAndMismatch) {
    const Grid a(GridGeometry{2, 2, 0, 0, 1}, -9999.0, 0.0);
    const Grid b(GridGeometry{3, 2, 0, 0, 1}, -9999.0, 0.0);
    EXPECT_THROW(FeatureStack({"x", "x"}, {a, a}), DomainError);
    EXPECT_THROW(FeatureStack({"x", "y"}, {a, b}), DomainError);
}

TEST(FocalProperty, ThreadCountDoesNotChangeResults) {
    const Grid dem = random_dem(29, 64);
    const Grid zeros(dem.geometry(), dem.nodata(), 0.0);
    set_thread_limit(1);
    const FeatureStack one = build_feature_stack(dem, zeros, zeros, zeros, TerrainConfig{});
    set_thread_limit(4);
    const FeatureStack four = build_feature_stack(dem, zeros, zeros, zeros, TerrainConfig{});
    set_thread_limit(0);
    for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one.layers()[i], four.layers()[i]) << one.names()[i];
}
