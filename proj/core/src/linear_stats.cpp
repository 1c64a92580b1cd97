#include "demcorrect/linear_stats.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "demcorrect/errors.hpp"
#include "demcorrect/numeric.hpp"
#include "demcorrect/parallel.hpp"

namespace demcorrect {

namespace {

// Column relative residual norm below which a column counts as dependent.
constexpr double kRankTolerance = 1e-10;

struct LeastSquares {
    std::vector<double> slopes;
    double intercept = 0.0;
    double ssr = 0.0;
    double sst = 0.0;
    std::optional<std::size_t> first_dependent;
};

std::vector<double> centered(std::span<const double> xs, double& mean) {
    mean = compensated_mean(xs);
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] - mean;
    return out;
}

double sum_squares(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x * x);
    return s.value();
}

// Least squares of y on the given columns plus an intercept. Dependent columns
// get a zero slope and the first one is reported.
LeastSquares solve(const std::vector<std::vector<double>>& columns, std::span<const double> y) {
    const std::size_t n = y.size();
    const std::size_t p = columns.size();

    std::vector<double> means(p);
    std::vector<std::vector<double>> a(p);
    std::vector<double> norms(p);
    for (std::size_t j = 0; j < p; ++j) {
        a[j] = centered(columns[j], means[j]);
        norms[j] = std::sqrt(sum_squares(a[j]));
    }
    double ymean = 0.0;
    std::vector<double> qty = centered(y, ymean);

    LeastSquares out;
    std::vector<std::size_t> pivots;  // kept columns, in order
    std::vector<double> diag;         // R diagonal per kept column
    std::vector<std::vector<double>> vs;  // Householder vectors

    for (std::size_t j = 0; j < p; ++j) {
        const std::size_t k = pivots.size();  // next row of R
        double tail = 0.0;
        for (std::size_t i = k; i < n; ++i) tail += a[j][i] * a[j][i];
        tail = std::sqrt(tail);
        if (k >= n || norms[j] == 0.0 || tail <= kRankTolerance * norms[j]) {
            if (!out.first_dependent) out.first_dependent = j;
            continue;
        }
        const double alpha = a[j][k] > 0.0 ? -tail : tail;
        std::vector<double> v(n - k);
        for (std::size_t i = k; i < n; ++i) v[i - k] = a[j][i];
        v[0] -= alpha;
        double vnorm2 = 0.0;
        for (double x : v) vnorm2 += x * x;

        auto reflect = [&](std::vector<double>& col) {
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i - k] * col[i];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < n; ++i) col[i] -= f * v[i - k];
        };
        for (std::size_t jj = j + 1; jj < p; ++jj) reflect(a[jj]);
        reflect(qty);
        a[j][k] = alpha;
        for (std::size_t i = k + 1; i < n; ++i) a[j][i] = 0.0;
        pivots.push_back(j);
        diag.push_back(alpha);
        vs.push_back(std::move(v));
    }

    // Back substitution on the kept columns; R(row, col) lives in a[col][row].
    out.slopes.assign(p, 0.0);
    const std::size_t r = pivots.size();
    for (std::size_t kk = r; kk-- > 0;) {
        double s = qty[kk];
        for (std::size_t m = kk + 1; m < r; ++m) s -= a[pivots[m]][kk] * out.slopes[pivots[m]];
        out.slopes[pivots[kk]] = s / diag[kk];
    }

    CompensatedSum intercept;
    intercept.add(ymean);
    for (std::size_t j = 0; j < p; ++j) intercept.add(-out.slopes[j] * means[j]);
    out.intercept = intercept.value();

    CompensatedSum ssr, sst;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < p; ++j) fit += out.slopes[j] * (columns[j][i] - means[j]);
        const double dy = y[i] - ymean;
        ssr.add((dy - fit) * (dy - fit));
        sst.add(dy * dy);
    }
    out.ssr = ssr.value();
    out.sst = sst.value();
    return out;
}

std::vector<std::vector<double>> columns_of(const SampleTable& table, std::span<const std::size_t> idx) {
    std::vector<std::vector<double>> cols;
    cols.reserve(idx.size());
    for (auto j : idx) cols.push_back(table.column(j));
    return cols;
}

std::vector<std::size_t> indices_of(const SampleTable& table, std::span<const std::string> names) {
    std::vector<std::size_t> idx;
    idx.reserve(names.size());
    for (const auto& n : names) idx.push_back(table.feature_index(n));
    return idx;
}

void require_variance(const SampleTable& table, const std::vector<std::vector<double>>& cols,
                      std::span<const std::size_t> idx) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto [lo, hi] = std::minmax_element(cols[j].begin(), cols[j].end());
        if (*lo == *hi) {
            const auto& name = table.feature_names[idx[j]];
            throw DiagnosticError(name, "feature '" + name + "' has zero variance");
        }
    }
}

}  // namespace

Matrix pearson_matrix(const SampleTable& table) {
    if (table.size() < 2) throw DomainError("pearson_matrix needs at least 2 rows");
    const std::size_t p = table.feature_names.size();
    std::vector<std::size_t> idx(p);
    for (std::size_t j = 0; j < p; ++j) idx[j] = j;
    auto cols = columns_of(table, idx);
    require_variance(table, cols, idx);

    std::vector<double> norms(p);
    for (std::size_t j = 0; j < p; ++j) {
        double mean = 0.0;
        cols[j] = centered(cols[j], mean);
        norms[j] = std::sqrt(sum_squares(cols[j]));
    }
    Matrix r(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        r(i, i) = 1.0;
        for (std::size_t j = i + 1; j < p; ++j) {
            CompensatedSum s;
            for (std::size_t k = 0; k < table.size(); ++k) s.add(cols[i][k] * cols[j][k]);
            const double v = std::clamp(s.value() / (norms[i] * norms[j]), -1.0, 1.0);
            r(i, j) = v;
            r(j, i) = v;
        }
    }
    return r;
}

std::vector<double> vif(const SampleTable& table, std::span<const std::string> features) {
    const std::size_t p = features.size();
    if (table.size() < p + 1) throw DomainError("vif needs at least |features| + 1 rows");
    const auto idx = indices_of(table, features);
    const auto cols = columns_of(table, idx);
    require_variance(table, cols, idx);

    std::vector<double> out(p, 1.0);
    if (p < 2) return out;
    parallel_for(p, [&](std::size_t k0, std::size_t k1) {
        for (std::size_t k = k0; k < k1; ++k) {
            std::vector<std::vector<double>> others;
            others.reserve(p - 1);
            for (std::size_t j = 0; j < p; ++j)
                if (j != k) others.push_back(cols[j]);
            const auto fit = solve(others, cols[k]);
            const double r2 = std::max(0.0, 1.0 - fit.ssr / fit.sst);
            out[k] = r2 >= 1.0 - 1e-12 ? kInfiniteVif : 1.0 / (1.0 - r2);
        }
    });
    return out;
}

std::vector<double> vif(const SampleTable& table) { return vif(table, table.feature_names); }

CollinearityReport flag_collinear(const SampleTable& table, const CollinearityThresholds& thresholds) {
    CollinearityReport report;
    report.variable_names = table.feature_names;
    report.thresholds = thresholds;
    report.pearson = pearson_matrix(table);
    report.vif = vif(table);

    std::vector<std::string> current = table.feature_names;
    std::vector<double> current_vif = report.vif;
    const bool vif_enabled = std::isfinite(thresholds.vif);
    while (vif_enabled && current.size() > 1) {
        std::size_t worst = 0;
        for (std::size_t k = 1; k < current.size(); ++k)
            if (current_vif[k] >= current_vif[worst]) worst = k;
        if (current_vif[worst] < thresholds.vif) break;
        report.flagged.push_back(current[worst]);
        report.flagged_vif.push_back(current_vif[worst]);
        current.erase(current.begin() + static_cast<std::ptrdiff_t>(worst));
        current_vif = vif(table, current);
    }
    report.retained = current;
    report.retained_vif = current_vif;

    if (std::isfinite(thresholds.r_abs)) {
        const auto idx = indices_of(table, current);
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = a + 1; b < idx.size(); ++b) {
                const double r = report.pearson(idx[a], idx[b]);
                if (std::abs(r) >= thresholds.r_abs)
                    report.notes.push_back("retained pair " + current[a] + "/" + current[b] +
                                           " has |r| = " + format_real(std::abs(r)));
            }
    }
    return report;
}

LinearModel fit_ols(const SampleTable& train, std::span<const std::string> features) {
    if (train.size() <= features.size() + 1)
        throw DomainError("fit_ols needs more than |features| + 1 rows");
    const auto idx = indices_of(train, features);
    const auto cols = columns_of(train, idx);
    const auto y = train.targets();
    const auto fit = solve(cols, y);
    if (fit.first_dependent) {
        const auto& name = features[*fit.first_dependent];
        throw SingularDesignError(name, "design matrix is rank deficient: column '" + name +
                                            "' depends on the intercept and earlier columns");
    }
    LinearModel model;
    model.feature_names.assign(features.begin(), features.end());
    model.intercept = fit.intercept;
    model.coefficients = fit.slopes;
    model.r_squared = fit.sst > 0.0 ? std::clamp(1.0 - fit.ssr / fit.sst, 0.0, 1.0) : 0.0;
    const double dof = static_cast<double>(train.size() - features.size() - 1);
    model.residual_std = std::sqrt(fit.ssr / dof);
    return model;
}

double predict_linear(const LinearModel& model, std::span<const double> x) {
    if (x.size() != model.coefficients.size())
        throw DomainError("predict_linear: expected " + std::to_string(model.coefficients.size()) +
                          " features, got " + std::to_string(x.size()));
    double y = model.intercept;
    for (std::size_t j = 0; j < x.size(); ++j) y += model.coefficients[j] * x[j];
    return y;
}

std::vector<double> predict_linear(const LinearModel& model, const SampleTable& table) {
    const auto idx = indices_of(table, model.feature_names);
    std::vector<double> out;
    out.reserve(table.size());
    std::vector<double> x(idx.size());
    for (const auto& s : table.rows) {
        for (std::size_t j = 0; j < idx.size(); ++j) x[j] = s.features[idx[j]];
        out.push_back(predict_linear(model, x));
    }
    return out;
}

}  // namespace demcorrect
