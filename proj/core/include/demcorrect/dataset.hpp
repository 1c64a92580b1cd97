#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "demcorrect/grid.hpp"
#include "demcorrect/terrain.hpp"

namespace demcorrect {

struct Sample {
    std::size_t row = 0;
    std::size_t col = 0;
    std::vector<double> features;
    double target = 0.0;  ///< elevation error, DEM minus reference
    std::optional<int> stratum;
};

/// Rows of (features, target, stratum). Every feature vector has one entry per
/// name and holds only finite values.
struct SampleTable {
    std::vector<std::string> feature_names;
    std::vector<Sample> rows;

    std::size_t size() const noexcept { return rows.size(); }
    bool empty() const noexcept { return rows.empty(); }
    std::size_t feature_index(std::string_view name) const;
    /// Column of feature values in row order.
    std::vector<double> column(std::size_t feature) const;
    std::vector<double> targets() const;

    void validate() const;
};

/// One row per selected cell where every layer and the target are valid.
/// With rate < 1, round(rate * valid) cells are drawn uniformly without
/// replacement; rows always come out in row-major cell order.
SampleTable extract_samples(const FeatureStack& stack, const Grid& target, const Grid* strata,
                            double rate, std::uint64_t seed);

struct SplitResult {
    SampleTable train;
    SampleTable test;
    std::vector<std::string> warnings;
};

/// Seeded disjoint partition. Unstratified: round(n * f) rows to train.
/// Stratified: each stratum (rows without a label form their own group)
/// contributes within one row of its proportional share, and the total still
/// equals round(n * f) over groups with at least two rows. Groups with fewer
/// than two rows go entirely to train with a warning.
SplitResult split(const SampleTable& table, double train_fraction, std::uint64_t seed,
                  bool stratified);

// CSV with header row,col,stratum,<feature names...>,target. Missing strata are
// written as empty fields.
void write_samples_csv(std::ostream& out, const SampleTable& table);
SampleTable read_samples_csv(std::istream& in);

}  // namespace demcorrect
