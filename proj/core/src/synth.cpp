#include "demcorrect/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "demcorrect/errors.hpp"
#include "demcorrect/landscape.hpp"
#include "demcorrect/numeric.hpp"

namespace demcorrect {

namespace {

// Mean written as first + mean offset so equal inputs give that value exactly.
double stable_mean(std::initializer_list<double> vs) {
    const double first = *vs.begin();
    double off = 0.0;
    for (double v : vs) off += v - first;
    return first + off / static_cast<double>(vs.size());
}

// Diamond-square field normalized to [-1, 1], cropped to rows x cols.
std::vector<double> noise_field(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    int k = 2;
    while ((std::size_t{1} << k) + 1 < std::max(rows, cols)) ++k;
    const Grid f = fractal_dem(k, 0.0, 1.0, 0.55, seed, 1.0);
    std::vector<double> out(rows * cols);
    double lo = f[0], hi = f[0];
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] = f(r, c);
            lo = std::min(lo, f(r, c));
            hi = std::max(hi, f(r, c));
        }
    const double span = hi > lo ? hi - lo : 1.0;
    for (double& v : out) v = 2.0 * (v - lo) / span - 1.0;
    return out;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    const auto k = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

struct Standardized {
    const Grid* layer;
    double mean;
    double inv_std;  // 0 for constant layers
    double at(std::size_t i) const { return ((*layer)[i] - mean) * inv_std; }
};

}  // namespace

Grid fractal_dem(int size_exponent, double base_height, double relief_amplitude, double roughness_decay,
                 std::uint64_t seed, double cellsize) {
    if (size_exponent < 2 || size_exponent > 14) throw DomainError("size exponent must lie in [2, 14]");
    if (!(relief_amplitude >= 0.0)) throw DomainError("relief amplitude must be >= 0");
    if (!(roughness_decay > 0.0 && roughness_decay <= 1.0)) throw DomainError("roughness decay must lie in (0, 1]");
    const std::size_t n = (std::size_t{1} << size_exponent) + 1;
    GridGeometry geom{n, n, 0.0, 0.0, cellsize};
    Grid g(geom, Grid::kDefaultNodata, 0.0);
    Rng rng(seed);
    auto jitter = [&](double scale) { return scale * rng.uniform(-1.0, 1.0); };

    const std::size_t last = n - 1;
    g(0, 0) = base_height + jitter(relief_amplitude);
    g(0, last) = base_height + jitter(relief_amplitude);
    g(last, 0) = base_height + jitter(relief_amplitude);
    g(last, last) = base_height + jitter(relief_amplitude);

    double scale = relief_amplitude;
    for (std::size_t step = last; step > 1; step /= 2) {
        const std::size_t half = step / 2;
        for (std::size_t r = half; r < n; r += step)
            for (std::size_t c = half; c < n; c += step)
                g(r, c) = stable_mean({g(r - half, c - half), g(r - half, c + half), g(r + half, c - half),
                                       g(r + half, c + half)}) +
                          jitter(scale);
        for (std::size_t r = 0; r < n; r += half) {
            for (std::size_t c = (r / half) % 2 == 0 ? half : 0; c < n; c += step) {
                double v;
                if (r == 0)
                    v = stable_mean({g(r, c - half), g(r, c + half), g(r + half, c)});
                else if (r == last)
                    v = stable_mean({g(r, c - half), g(r, c + half), g(r - half, c)});
                else if (c == 0)
                    v = stable_mean({g(r - half, c), g(r + half, c), g(r, c + half)});
                else if (c == last)
                    v = stable_mean({g(r - half, c), g(r + half, c), g(r, c - half)});
                else
                    v = stable_mean({g(r - half, c), g(r + half, c), g(r, c - half), g(r, c + half)});
                g(r, c) = v + jitter(scale);
            }
        }
        scale *= roughness_decay;
    }
    return g;
}

Landcover synth_landcover(const Grid& dem, std::uint64_t seed) {
    const std::size_t rows = dem.nrows();
    const std::size_t cols = dem.ncols();
    const std::size_t n = dem.size();
    const Grid slp = slope(dem);

    Landcover lc{Grid(dem.geometry(), dem.nodata(), 0.0), Grid(dem.geometry(), dem.nodata(), 0.0),
                 Grid(dem.geometry(), dem.nodata(), 0.0), Grid(dem.geometry(), dem.nodata())};

    // Peninsula is a western strip; the rest is banded by elevation, then by
    // slope.
    const auto peninsula_cols = std::max<std::size_t>(1, cols / 5);
    std::vector<double> inland_z, inland_s;
    for (std::size_t i = 0; i < n; ++i) {
        if (!dem.valid(i) || i % cols < peninsula_cols) continue;
        inland_z.push_back(dem[i]);
        inland_s.push_back(slp.valid(i) ? slp[i] : 0.0);
    }
    const double z_low = quantile(inland_z, 0.30);
    const double z_high = quantile(inland_z, 0.75);
    std::vector<double> mid_s;
    for (std::size_t k = 0; k < inland_z.size(); ++k)
        if (inland_z[k] > z_low && inland_z[k] < z_high) mid_s.push_back(inland_s[k]);
    const double s_mid = quantile(mid_s, 0.5);

    for (std::size_t i = 0; i < n; ++i) {
        if (!dem.valid(i)) continue;
        Landscape l;
        if (i % cols < peninsula_cols)
            l = Landscape::peninsula;
        else if (dem[i] >= z_high)
            l = Landscape::mountain;
        else if (dem[i] <= z_low)
            l = Landscape::urban;
        else
            l = (slp.valid(i) ? slp[i] : 0.0) <= s_mid ? Landscape::agricultural : Landscape::grassland;
        lc.strata[i] = static_cast<double>(static_cast<int>(l));
    }

    // Seeded industrial patches inside the lowland bands.
    Rng rng(seed);
    const double radius = static_cast<double>(std::max(rows, cols)) / 20.0;
    for (int p = 0; p < 4; ++p) {
        const double pr = rng.uniform(0.0, static_cast<double>(rows));
        const double pc = rng.uniform(static_cast<double>(peninsula_cols), static_cast<double>(cols));
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = peninsula_cols; c < cols; ++c) {
                const std::size_t i = r * cols + c;
                if (!lc.strata.valid(i) || lc.strata[i] == static_cast<int>(Landscape::mountain)) continue;
                const double dr = static_cast<double>(r) - pr;
                const double dc = static_cast<double>(c) - pc;
                if (dr * dr + dc * dc <= radius * radius) lc.strata[i] = static_cast<int>(Landscape::urban);
            }
    }

    const auto u = noise_field(rows, cols, seed ^ 0x75726261ull);
    const auto f = noise_field(rows, cols, seed ^ 0x666f7265ull);
    const auto b = noise_field(rows, cols, seed ^ 0x62617265ull);
    for (std::size_t i = 0; i < n; ++i) {
        if (!dem.valid(i)) {
            lc.bare[i] = lc.urban[i] = lc.forest[i] = dem.nodata();
            continue;
        }
        const auto l = static_cast<Landscape>(static_cast<int>(lc.strata[i]));
        const bool urban = l == Landscape::urban ? u[i] > -0.5 : u[i] > 0.85;
        const bool wooded = l == Landscape::mountain || l == Landscape::grassland || l == Landscape::peninsula;
        const bool forest = !urban && (wooded ? f[i] > -0.2 : f[i] > 0.6);
        const bool rocky = l == Landscape::mountain || l == Landscape::peninsula;
        const bool bare = !urban && !forest && (rocky ? b[i] > -0.3 : b[i] > 0.4);
        lc.urban[i] = urban ? 1.0 : 0.0;
        lc.forest[i] = forest ? 1.0 : 0.0;
        lc.bare[i] = bare ? 1.0 : 0.0;
    }
    return lc;
}

void ErrorSpec::validate() const {
    auto known = [](const std::string& name) {
        return std::find(kFeatureNames.begin(), kFeatureNames.end(), name) != kFeatureNames.end();
    };
    for (const auto& [name, coef] : linear_terms) {
        if (!known(name)) throw DomainError("error spec references unknown feature '" + name + "'");
        if (!std::isfinite(coef)) throw DomainError("error spec coefficient for '" + name + "' is not finite");
    }
    for (const auto& t : nonlinear_terms) {
        if (!known(t.feature)) throw DomainError("error spec references unknown feature '" + t.feature + "'");
        if (!t.partner.empty() && !known(t.partner))
            throw DomainError("error spec references unknown feature '" + t.partner + "'");
        if (!std::isfinite(t.amplitude) || !std::isfinite(t.scale))
            throw DomainError("error spec term on '" + t.feature + "' is not finite");
    }
    if (!(noise_std >= 0.0)) throw DomainError("noise_std must be >= 0");
}

InjectedError inject_error(const Grid& dem, const FeatureStack& stack, const ErrorSpec& spec) {
    spec.validate();
    if (!same_geometry(dem.geometry(), stack.geometry()))
        throw DomainError("inject_error: feature stack geometry differs from the DEM");

    std::map<std::string, Standardized> z;
    auto reference = [&](const std::string& name) {
        if (z.count(name)) return;
        const Grid& layer = stack.layer(name);
        CompensatedSum s;
        std::size_t count = 0;
        for (std::size_t i = 0; i < layer.size(); ++i)
            if (layer.valid(i)) {
                s.add(layer[i]);
                ++count;
            }
        const double mean = count ? s.value() / static_cast<double>(count) : 0.0;
        CompensatedSum v;
        for (std::size_t i = 0; i < layer.size(); ++i)
            if (layer.valid(i)) v.add((layer[i] - mean) * (layer[i] - mean));
        const double sd = count ? std::sqrt(v.value() / static_cast<double>(count)) : 0.0;
        z.emplace(name, Standardized{&layer, mean, sd > 0.0 ? 1.0 / sd : 0.0});
    };
    for (const auto& [name, coef] : spec.linear_terms) reference(name);
    for (const auto& t : spec.nonlinear_terms) {
        reference(t.feature);
        if (!t.partner.empty()) reference(t.partner);
    }

    Rng rng(spec.seed);
    InjectedError out{Grid(dem.geometry(), dem.nodata()), Grid(dem.geometry(), dem.nodata())};
    for (std::size_t i = 0; i < dem.size(); ++i) {
        if (!dem.valid(i)) continue;
        bool ok = true;
        for (const auto& [name, s] : z) ok = ok && s.layer->valid(i);
        if (!ok) continue;

        double dh = 0.0;
        for (const auto& [name, coef] : spec.linear_terms) dh += coef * z.at(name).at(i);
        for (const auto& t : spec.nonlinear_terms) {
            const double v = z.at(t.feature).at(i);
            switch (t.kind) {
                case TermKind::sine: dh += t.amplitude * std::sin(t.scale * v); break;
                case TermKind::step: dh += v > t.scale ? t.amplitude : 0.0; break;
                case TermKind::product: {
                    const double w = t.partner.empty() ? v : z.at(t.partner).at(i);
                    dh += t.amplitude * t.scale * v * w;
                    break;
                }
            }
        }
        if (spec.noise_std > 0.0) dh += spec.noise_std * rng.normal();
        out.degraded[i] = dem[i] + dh;
        // Recorded as the rounded difference so difference(degraded, dem)
        // reproduces it exactly.
        out.true_dh[i] = out.degraded[i] - dem[i];
    }
    return out;
}

const char* term_kind_name(TermKind k) noexcept {
    switch (k) {
        case TermKind::sine: return "sine";
        case TermKind::step: return "step";
        case TermKind::product: return "product";
    }
    return "sine";
}

TermKind parse_term_kind(std::string_view name) {
    if (name == "sine") return TermKind::sine;
    if (name == "step") return TermKind::step;
    if (name == "product") return TermKind::product;
    throw DomainError("unknown error term kind '" + std::string(name) + "'");
}

}  // namespace demcorrect
