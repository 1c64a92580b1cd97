#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "demcorrect/gbdt.hpp"
#include "demcorrect/grid.hpp"
#include "demcorrect/linear_stats.hpp"
#include "demcorrect/terrain.hpp"

namespace demcorrect {

/// Error statistics over one sample (errors are DEM minus reference, meters).
struct Metrics {
    std::size_t n = 0;
    double me = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    double std = 0.0;  ///< n - 1 denominator; 0 for a single value
};

/// Compensated sums in input order. Throws DomainError on empty input.
Metrics compute_metrics(std::span<const double> errors);

/// 100 * (before - after) / before; negative when accuracy got worse.
double pct_rmse_reduction(double before, double after);

Grid predict_error_grid(const LinearModel& model, const FeatureStack& stack);
Grid predict_error_grid(const GbdtModel& model, const FeatureStack& stack);

/// dem - dh, the corrected surface.
Grid apply_correction(const Grid& dem, const Grid& dh);
Grid abs_error_grid(const Grid& corrected, const Grid& reference);

struct StratumReport {
    std::optional<int> label;  ///< empty for the overall entry
    std::string name;
    Metrics before;
    std::map<std::string, Metrics> after;
    std::map<std::string, double> pct_reduction;
};

struct EvaluationReport {
    std::vector<std::string> models;  ///< column order
    std::vector<StratumReport> strata;
    StratumReport overall;
    std::vector<std::string> warnings;
    std::map<std::string, std::string> provenance;
};

using NamedGrid = std::pair<std::string, Grid>;

/// Metrics over cells valid in every grid (and set to 1 in `evaluation_mask`
/// when given), per strata label and overall. The five landscape labels are
/// always considered; one without common valid cells is omitted with a
/// warning.
EvaluationReport build_report(const Grid& reference, const Grid& original,
                              const std::vector<NamedGrid>& corrected_by_model, const Grid& strata,
                              const Grid* evaluation_mask = nullptr,
                              std::map<std::string, std::string> provenance = {});

/// Landscape rows by model columns, one decimal, followed by an overall line.
std::string render_table(const EvaluationReport& report);

}  // namespace demcorrect
