#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "demcorrect/grid.hpp"

namespace demcorrect {

/// Square focal window of (2*radius+1)^2 cells. A focal result is nodata when
/// the valid fraction of the window (out-of-bounds counts as invalid) falls
/// below min_valid_fraction, or when the center cell itself is nodata.
struct WindowSpec {
    int radius = 1;
    double min_valid_fraction = 1.0;

    void validate() const;
};

/// Canonical predictor order.
inline constexpr std::array<std::string_view, 11> kFeatureNames = {
    "elevation", "slope", "aspect", "roughness", "tpi", "tri",
    "texture",   "vrm",   "pct_bare", "urban", "pct_forest"};

/// Aspect value for cells without a downslope direction.
inline constexpr double kFlatAspect = -1.0;

struct TerrainConfig {
    WindowSpec roughness{1, 1.0};
    WindowSpec tpi{1, 1.0};
    WindowSpec vrm{3, 1.0};
    WindowSpec texture{10, 1.0};
    double texture_threshold = 1.0;
    WindowSpec landcover{3, 1.0};

    void validate() const;
};

/// Named, geometry-aligned predictor layers.
class FeatureStack {
public:
    FeatureStack() = default;
    /// Throws DomainError on duplicate names or mismatched geometries.
    FeatureStack(std::vector<std::string> names, std::vector<Grid> layers);

    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<Grid>& layers() const noexcept { return layers_; }
    std::size_t size() const noexcept { return names_.size(); }
    const GridGeometry& geometry() const;

    /// Index of `name`, or size() when absent.
    std::size_t index_of(std::string_view name) const noexcept;
    const Grid& layer(std::string_view name) const;

private:
    std::vector<std::string> names_;
    std::vector<Grid> layers_;
};

// Horn 3x3 gradient derivatives. Border cells and windows touching nodata are
// nodata.
Grid slope(const Grid& dem);
/// Degrees clockwise from north of steepest descent, [0, 360); kFlatAspect on
/// zero gradient.
Grid aspect(const Grid& dem);

/// Focal max - min.
Grid roughness(const Grid& dem, const WindowSpec& w);
/// Center minus mean of the valid window cells excluding the center.
Grid tpi(const Grid& dem, const WindowSpec& w);
/// Root-sum-square of the eight center-to-neighbor differences.
Grid tri(const Grid& dem);
/// Percent of pit/peak cells within the window. A cell is a pit or peak when
/// it departs from the median of its eight neighbors by more than `threshold`.
Grid texture(const Grid& dem, double threshold, const WindowSpec& w);
/// Vector ruggedness: 1 - |sum of unit normals| / count over the window.
Grid vrm(const Grid& dem, const WindowSpec& w);
/// Percent of valid window cells equal to 1. Mask values must be 0, 1, or
/// nodata.
Grid focal_fraction(const Grid& mask, const WindowSpec& w);

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};
/// Unit surface normal from slope and aspect (both degrees). Flat aspect gives
/// the vertical normal.
Vec3 surface_normal(double slope_deg, double aspect_deg);
/// 1 - |sum(normals)| / n, clamped to [0, 1]. Empty input yields 0.
double vector_ruggedness(std::span<const Vec3> normals);

FeatureStack build_feature_stack(const Grid& dem, const Grid& bare, const Grid& urban,
                                 const Grid& forest, const TerrainConfig& cfg);

}  // namespace demcorrect
