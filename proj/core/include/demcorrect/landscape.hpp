#pragma once

#include <array>
#include <string>

namespace demcorrect {

/// Integer labels used in strata rasters.
enum class Landscape : int {
    urban = 1,
    agricultural = 2,
    mountain = 3,
    peninsula = 4,
    grassland = 5,
};

inline constexpr std::array<Landscape, 5> kLandscapes = {
    Landscape::urban, Landscape::agricultural, Landscape::mountain, Landscape::peninsula,
    Landscape::grassland};

/// Display name, e.g. "Urban/industrial"; unknown labels render as "stratum N".
std::string landscape_name(int label);

}  // namespace demcorrect
