#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "demcorrect/dataset.hpp"

namespace demcorrect {

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
};

/// VIF reported for exactly collinear variables.
inline constexpr double kInfiniteVif = std::numeric_limits<double>::infinity();

struct CollinearityThresholds {
    double r_abs = 0.9;
    double vif = 10.0;
};

struct CollinearityReport {
    std::vector<std::string> variable_names;
    Matrix pearson;
    std::vector<double> vif;  ///< over all variables, before any removal
    std::vector<std::string> flagged;  ///< removal order
    std::vector<double> flagged_vif;   ///< VIF at the moment of removal
    std::vector<std::string> retained;
    std::vector<double> retained_vif;
    CollinearityThresholds thresholds;
    std::vector<std::string> notes;
};

struct LinearModel {
    std::vector<std::string> feature_names;
    double intercept = 0.0;
    std::vector<double> coefficients;
    double r_squared = 0.0;
    double residual_std = 0.0;
};

/// Sample Pearson correlations between all feature columns. Throws
/// DiagnosticError on a zero-variance feature.
Matrix pearson_matrix(const SampleTable& table);

/// Variance inflation factor per feature, 1/(1 - R^2) of each feature
/// regressed on the rest with intercept. R^2 >= 1 - 1e-12 yields kInfiniteVif.
std::vector<double> vif(const SampleTable& table);
/// VIF over the named subset, in the given order.
std::vector<double> vif(const SampleTable& table, std::span<const std::string> features);

/// Repeatedly drops the highest-VIF variable while any VIF reaches the
/// threshold (ties drop the later variable). Surviving pairs with
/// |r| >= r_abs are recorded in notes. An infinite threshold disables its test.
CollinearityReport flag_collinear(const SampleTable& table, const CollinearityThresholds& thresholds = {});

/// Ordinary least squares with intercept via Householder QR on centered
/// columns. Throws SingularDesignError naming the first column that lies in
/// the span of the intercept and earlier columns.
LinearModel fit_ols(const SampleTable& train, std::span<const std::string> features);

double predict_linear(const LinearModel& model, std::span<const double> x);

/// Projects `table` rows onto the model's feature order.
std::vector<double> predict_linear(const LinearModel& model, const SampleTable& table);

}  // namespace demcorrect
