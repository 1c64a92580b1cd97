#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "demcorrect/grid.hpp"
#include "demcorrect/terrain.hpp"

namespace demcorrect {

/// Diamond-square terrain on a (2^k + 1)^2 grid. Corner heights and every
/// displacement are base + amplitude * U(-1, 1) scaled by `roughness_decay`
/// per level. Deterministic per seed.
Grid fractal_dem(int size_exponent, double base_height, double relief_amplitude, double roughness_decay,
                 std::uint64_t seed, double cellsize = 30.0);

struct Landcover {
    Grid bare;
    Grid urban;
    Grid forest;
    Grid strata;  ///< Landscape labels
};

/// Binary masks and landscape strata derived from elevation/slope banding with
/// seeded noise patches. All five landscapes appear for k >= 7 grids.
Landcover synth_landcover(const Grid& dem, std::uint64_t seed);

enum class TermKind { sine, step, product };

/// Applied to the standardized feature z:
///   sine:    amplitude * sin(scale * z)
///   step:    amplitude * [z > scale]
///   product: amplitude * scale * z * z_partner (partner defaults to feature)
struct NonlinearTerm {
    std::string feature;
    TermKind kind = TermKind::sine;
    double amplitude = 1.0;
    double scale = 1.0;
    std::string partner;
};

struct ErrorSpec {
    std::vector<std::pair<std::string, double>> linear_terms;
    std::vector<NonlinearTerm> nonlinear_terms;
    double noise_std = 0.0;
    std::uint64_t seed = 0;

    /// Throws DomainError for features outside the canonical eleven.
    void validate() const;
};

struct InjectedError {
    Grid degraded;
    Grid true_dh;  ///< equals difference(degraded, dem) bit for bit
};

/// Builds a known elevation error from standardized (population mean/std over
/// valid cells) stack layers and adds it to the DEM. Cells where the DEM or a
/// referenced layer is nodata stay nodata in both outputs.
InjectedError inject_error(const Grid& dem, const FeatureStack& stack, const ErrorSpec& spec);

const char* term_kind_name(TermKind k) noexcept;
TermKind parse_term_kind(std::string_view name);

}  // namespace demcorrect
