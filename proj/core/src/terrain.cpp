#include "demcorrect/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "demcorrect/errors.hpp"
#include "demcorrect/parallel.hpp"

namespace demcorrect {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Gradient {
    double p;  // dz/dx, eastward
    double q;  // dz/dy, northward
};

// Horn weighted central differences. False when the 3x3 window is incomplete.
bool horn(const Grid& dem, std::size_t r, std::size_t c, Gradient& g) {
    if (r == 0 || c == 0 || r + 1 >= dem.nrows() || c + 1 >= dem.ncols()) return false;
    double z[3][3];
    for (int dr = 0; dr < 3; ++dr)
        for (int dc = 0; dc < 3; ++dc) {
            const double v = dem(r + dr - 1, c + dc - 1);
            if (dem.is_nodata(v)) return false;
            z[dr][dc] = v;
        }
    const double h = 8.0 * dem.geometry().cellsize;
    g.p = ((z[0][2] + 2.0 * z[1][2] + z[2][2]) - (z[0][0] + 2.0 * z[1][0] + z[2][0])) / h;
    g.q = ((z[0][0] + 2.0 * z[0][1] + z[0][2]) - (z[2][0] + 2.0 * z[2][1] + z[2][2])) / h;
    return true;
}

double slope_from(const Gradient& g) { return std::atan(std::hypot(g.p, g.q)) * kRadToDeg; }

double aspect_from(const Gradient& g) {
    if (g.p == 0.0 && g.q == 0.0) return kFlatAspect;
    // Steepest descent points along (-p, -q) in (east, north).
    double a = std::atan2(-g.p, -g.q) * kRadToDeg;
    if (a < 0.0) a += 360.0;
    if (a >= 360.0) a -= 360.0;
    return a;
}

// Per-cell transform over rows in parallel; `fn(r, c)` returns the output value
// or the output nodata.
template <class Fn>
Grid per_cell(const Grid& src, Fn fn) {
    Grid out(src.geometry(), src.nodata());
    parallel_for(src.nrows(), [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r)
            for (std::size_t c = 0; c < src.ncols(); ++c) out(r, c) = fn(r, c);
    });
    return out;
}

// Calls reduce(values, center) with the valid window values (center included,
// row-major order) when the window passes the WindowSpec validity rule.
template <class Reduce>
Grid focal(const Grid& src, const WindowSpec& w, Reduce reduce) {
    w.validate();
    const auto rad = static_cast<std::ptrdiff_t>(w.radius);
    const double window_cells = static_cast<double>((2 * rad + 1) * (2 * rad + 1));
    const auto nrows = static_cast<std::ptrdiff_t>(src.nrows());
    const auto ncols = static_cast<std::ptrdiff_t>(src.ncols());
    const double nodata = src.nodata();

    Grid out(src.geometry(), nodata);
    parallel_for(src.nrows(), [&](std::size_t r0, std::size_t r1) {
        std::vector<double> buf;
        buf.reserve(static_cast<std::size_t>(window_cells));
        for (auto r = static_cast<std::ptrdiff_t>(r0); r < static_cast<std::ptrdiff_t>(r1); ++r) {
            for (std::ptrdiff_t c = 0; c < ncols; ++c) {
                const double center = src(r, c);
                if (center == nodata) continue;
                buf.clear();
                for (auto rr = std::max<std::ptrdiff_t>(0, r - rad);
                     rr <= std::min(nrows - 1, r + rad); ++rr)
                    for (auto cc = std::max<std::ptrdiff_t>(0, c - rad);
                         cc <= std::min(ncols - 1, c + rad); ++cc) {
                        const double v = src(rr, cc);
                        if (v != nodata) buf.push_back(v);
                    }
                if (static_cast<double>(buf.size()) / window_cells < w.min_valid_fraction) continue;
                out(r, c) = reduce(std::span<const double>(buf), center);
            }
        }
    });
    return out;
}

Grid normals_component(const Grid& dem, int axis) {
    return per_cell(dem, [&](std::size_t r, std::size_t c) {
        Gradient g{};
        if (!horn(dem, r, c, g)) return dem.nodata();
        const Vec3 n = surface_normal(slope_from(g), aspect_from(g));
        return axis == 0 ? n.x : axis == 1 ? n.y : n.z;
    });
}

}  // namespace

void WindowSpec::validate() const {
    if (radius < 1) throw DomainError("window radius must be a positive integer");
    if (!(min_valid_fraction > 0.0 && min_valid_fraction <= 1.0))
        throw DomainError("min_valid_fraction must lie in (0, 1]");
}

void TerrainConfig::validate() const {
    roughness.validate();
    tpi.validate();
    vrm.validate();
    texture.validate();
    landcover.validate();
    if (!(texture_threshold >= 0.0)) throw DomainError("texture threshold must be >= 0");
}

FeatureStack::FeatureStack(std::vector<std::string> names, std::vector<Grid> layers)
    : names_(std::move(names)), layers_(std::move(layers)) {
    if (names_.size() != layers_.size())
        throw DomainError("feature stack needs one layer per name");
    for (std::size_t i = 0; i < names_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j)
            if (names_[i] == names_[j]) throw DomainError("duplicate feature name '" + names_[i] + "'");
        if (i > 0) require_same_geometry(layers_[0], layers_[i], "feature layer '" + names_[i] + "'");
    }
}

const GridGeometry& FeatureStack::geometry() const {
    if (layers_.empty()) throw DomainError("empty feature stack has no geometry");
    return layers_.front().geometry();
}

std::size_t FeatureStack::index_of(std::string_view name) const noexcept {
    return static_cast<std::size_t>(std::find(names_.begin(), names_.end(), name) - names_.begin());
}

const Grid& FeatureStack::layer(std::string_view name) const {
    const auto i = index_of(name);
    if (i == names_.size()) throw DomainError("feature stack has no layer '" + std::string(name) + "'");
    return layers_[i];
}

Grid slope(const Grid& dem) {
    return per_cell(dem, [&](std::size_t r, std::size_t c) {
        Gradient g{};
        return horn(dem, r, c, g) ? slope_from(g) : dem.nodata();
    });
}

Grid aspect(const Grid& dem) {
    return per_cell(dem, [&](std::size_t r, std::size_t c) {
        Gradient g{};
        return horn(dem, r, c, g) ? aspect_from(g) : dem.nodata();
    });
}

Grid roughness(const Grid& dem, const WindowSpec& w) {
    return focal(dem, w, [](std::span<const double> v, double) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return *hi - *lo;
    });
}

Grid tpi(const Grid& dem, const WindowSpec& w) {
    const double nodata = dem.nodata();
    return focal(dem, w, [nodata](std::span<const double> v, double center) {
        // The center contributes a zero offset, so summing offsets over every
        // value equals summing over the neighbors alone.
        if (v.size() < 2) return nodata;
        double offsets = 0.0;
        for (double x : v) offsets += x - center;
        return -offsets / static_cast<double>(v.size() - 1);
    });
}

Grid tri(const Grid& dem) {
    const auto nrows = dem.nrows();
    const auto ncols = dem.ncols();
    return per_cell(dem, [&](std::size_t r, std::size_t c) {
        if (r == 0 || c == 0 || r + 1 >= nrows || c + 1 >= ncols) return dem.nodata();
        const double zc = dem(r, c);
        if (dem.is_nodata(zc)) return dem.nodata();
        double ss = 0.0;
        for (std::size_t rr = r - 1; rr <= r + 1; ++rr)
            for (std::size_t cc = c - 1; cc <= c + 1; ++cc) {
                const double v = dem(rr, cc);
                if (dem.is_nodata(v)) return dem.nodata();
                ss += (v - zc) * (v - zc);
            }
        return std::sqrt(ss);
    });
}

Grid texture(const Grid& dem, double threshold, const WindowSpec& w) {
    if (!(threshold >= 0.0)) throw DomainError("texture threshold must be >= 0");
    const auto nrows = dem.nrows();
    const auto ncols = dem.ncols();
    const Grid flags = per_cell(dem, [&](std::size_t r, std::size_t c) {
        if (r == 0 || c == 0 || r + 1 >= nrows || c + 1 >= ncols) return dem.nodata();
        const double zc = dem(r, c);
        if (dem.is_nodata(zc)) return dem.nodata();
        std::array<double, 8> nb{};
        std::size_t k = 0;
        for (std::size_t rr = r - 1; rr <= r + 1; ++rr)
            for (std::size_t cc = c - 1; cc <= c + 1; ++cc) {
                if (rr == r && cc == c) continue;
                const double v = dem(rr, cc);
                if (dem.is_nodata(v)) return dem.nodata();
                nb[k++] = v;
            }
        std::sort(nb.begin(), nb.end());
        const double median = 0.5 * (nb[3] + nb[4]);
        return std::abs(zc - median) > threshold ? 1.0 : 0.0;
    });
    return focal(flags, w, [](std::span<const double> v, double) {
        double n = 0.0;
        for (double x : v) n += x;
        return 100.0 * n / static_cast<double>(v.size());
    });
}

Vec3 surface_normal(double slope_deg, double aspect_deg) {
    const double s = slope_deg * kDegToRad;
    if (aspect_deg == kFlatAspect) return {0.0, 0.0, std::cos(s)};
    const double a = aspect_deg * kDegToRad;
    return {std::sin(s) * std::sin(a), std::sin(s) * std::cos(a), std::cos(s)};
}

double vector_ruggedness(std::span<const Vec3> normals) {
    if (normals.empty()) return 0.0;
    double x = 0.0, y = 0.0, z = 0.0;
    for (const auto& n : normals) {
        x += n.x;
        y += n.y;
        z += n.z;
    }
    const double r = std::sqrt(x * x + y * y + z * z);
    return std::clamp(1.0 - r / static_cast<double>(normals.size()), 0.0, 1.0);
}

Grid vrm(const Grid& dem, const WindowSpec& w) {
    w.validate();
    const Grid nx = normals_component(dem, 0);
    const Grid ny = normals_component(dem, 1);
    const Grid nz = normals_component(dem, 2);
    const auto rad = static_cast<std::ptrdiff_t>(w.radius);
    const double window_cells = static_cast<double>((2 * rad + 1) * (2 * rad + 1));
    const auto nrows = static_cast<std::ptrdiff_t>(dem.nrows());
    const auto ncols = static_cast<std::ptrdiff_t>(dem.ncols());

    Grid out(dem.geometry(), dem.nodata());
    parallel_for(dem.nrows(), [&](std::size_t r0, std::size_t r1) {
        std::vector<Vec3> buf;
        for (auto r = static_cast<std::ptrdiff_t>(r0); r < static_cast<std::ptrdiff_t>(r1); ++r)
            for (std::ptrdiff_t c = 0; c < ncols; ++c) {
                if (!nz.valid(r, c)) continue;
                buf.clear();
                for (auto rr = std::max<std::ptrdiff_t>(0, r - rad);
                     rr <= std::min(nrows - 1, r + rad); ++rr)
                    for (auto cc = std::max<std::ptrdiff_t>(0, c - rad);
                         cc <= std::min(ncols - 1, c + rad); ++cc)
                        if (nz.valid(rr, cc)) buf.push_back({nx(rr, cc), ny(rr, cc), nz(rr, cc)});
                if (static_cast<double>(buf.size()) / window_cells < w.min_valid_fraction) continue;
                out(r, c) = vector_ruggedness(buf);
            }
    });
    return out;
}

Grid focal_fraction(const Grid& mask, const WindowSpec& w) {
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const double v = mask[i];
        if (mask.is_nodata(v) || v == 0.0 || v == 1.0) continue;
        throw DomainError("mask cell " + std::to_string(i) + " holds non-binary value " +
                          format_real(v));
    }
    return focal(mask, w, [](std::span<const double> v, double) {
        double ones = 0.0;
        for (double x : v) ones += x;
        return 100.0 * ones / static_cast<double>(v.size());
    });
}

FeatureStack build_feature_stack(const Grid& dem, const Grid& bare, const Grid& urban,
                                 const Grid& forest, const TerrainConfig& cfg) {
    cfg.validate();
    require_same_geometry(dem, bare, "bare-ground mask");
    require_same_geometry(dem, urban, "urban mask");
    require_same_geometry(dem, forest, "forest mask");

    // Urban passes through as a binary layer; re-encode on the DEM sentinel.
    Grid urban_layer(dem.geometry(), dem.nodata());
    for (std::size_t i = 0; i < urban.size(); ++i) {
        const double v = urban[i];
        if (urban.is_nodata(v)) continue;
        if (v != 0.0 && v != 1.0)
            throw DomainError("urban mask cell " + std::to_string(i) + " is not binary");
        urban_layer[i] = v;
    }
    auto on_dem_sentinel = [&](const Grid& g) {
        if (g.nodata() == dem.nodata()) return g;
        Grid out(dem.geometry(), dem.nodata());
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.valid(i)) out[i] = g[i];
        return out;
    };

    std::vector<Grid> layers;
    layers.reserve(kFeatureNames.size());
    layers.push_back(dem);
    layers.push_back(slope(dem));
    layers.push_back(aspect(dem));
    layers.push_back(roughness(dem, cfg.roughness));
    layers.push_back(tpi(dem, cfg.tpi));
    layers.push_back(tri(dem));
    layers.push_back(texture(dem, cfg.texture_threshold, cfg.texture));
    layers.push_back(vrm(dem, cfg.vrm));
    layers.push_back(on_dem_sentinel(focal_fraction(bare, cfg.landcover)));
    layers.push_back(std::move(urban_layer));
    layers.push_back(on_dem_sentinel(focal_fraction(forest, cfg.landcover)));
    return FeatureStack({kFeatureNames.begin(), kFeatureNames.end()}, std::move(layers));
}

}  // namespace demcorrect
