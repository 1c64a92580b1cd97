#include "demcorrect/correction.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "demcorrect/errors.hpp"
#include "demcorrect/landscape.hpp"
#include "demcorrect/numeric.hpp"
#include "demcorrect/parallel.hpp"

namespace demcorrect {

std::string landscape_name(int label) {
    switch (static_cast<Landscape>(label)) {
        case Landscape::urban: return "Urban/industrial";
        case Landscape::agricultural: return "Agricultural land";
        case Landscape::mountain: return "Mountain";
        case Landscape::peninsula: return "Peninsula";
        case Landscape::grassland: return "Grassland/shrubland";
    }
    return "stratum " + std::to_string(label);
}

Metrics compute_metrics(std::span<const double> errors) {
    if (errors.empty()) throw DomainError("compute_metrics needs at least one error value");
    CompensatedSum sum, abs_sum, sq_sum;
    for (double e : errors) {
        sum.add(e);
        abs_sum.add(std::abs(e));
        sq_sum.add(e * e);
    }
    const auto n = static_cast<double>(errors.size());
    Metrics m;
    m.n = errors.size();
    m.me = sum.value() / n;
    m.mae = abs_sum.value() / n;
    m.rmse = std::sqrt(sq_sum.value() / n);
    if (errors.size() > 1) {
        CompensatedSum dev;
        for (double e : errors) dev.add((e - m.me) * (e - m.me));
        m.std = std::sqrt(dev.value() / (n - 1.0));
    }
    return m;
}

double pct_rmse_reduction(double before, double after) {
    if (!(before > 0.0)) throw DomainError("pct_rmse_reduction needs a positive baseline RMSE");
    return 100.0 * (before - after) / before;
}

namespace {

template <class Predict>
Grid predict_grid(const std::vector<std::string>& names, const FeatureStack& stack, Predict predict) {
    std::vector<const Grid*> layers;
    layers.reserve(names.size());
    for (const auto& name : names) {
        const auto i = stack.index_of(name);
        if (i == stack.size()) throw DomainError("feature stack lacks model feature '" + name + "'");
        layers.push_back(&stack.layers()[i]);
    }
    const Grid& first = stack.layers().front();
    Grid out(first.geometry(), first.nodata());
    parallel_for(first.nrows(), [&](std::size_t r0, std::size_t r1) {
        std::vector<double> x(layers.size());
        const std::size_t ncols = first.ncols();
        for (std::size_t i = r0 * ncols; i < r1 * ncols; ++i) {
            bool ok = true;
            for (std::size_t j = 0; j < layers.size() && ok; ++j) {
                ok = layers[j]->valid(i);
                x[j] = (*layers[j])[i];
            }
            if (ok) out[i] = predict(x);
        }
    });
    return out;
}

}  // namespace

Grid predict_error_grid(const LinearModel& model, const FeatureStack& stack) {
    return predict_grid(model.feature_names, stack,
                        [&](std::span<const double> x) { return predict_linear(model, x); });
}

Grid predict_error_grid(const GbdtModel& model, const FeatureStack& stack) {
    return predict_grid(model.feature_names, stack,
                        [&](std::span<const double> x) { return predict_gbdt(model, x); });
}

Grid apply_correction(const Grid& dem, const Grid& dh) {
    require_same_geometry(dem, dh, "apply_correction");
    Grid out(dem.geometry(), dem.nodata());
    for (std::size_t i = 0; i < dem.size(); ++i)
        if (dem.valid(i) && dh.valid(i)) out[i] = dem[i] - dh[i];
    return out;
}

Grid abs_error_grid(const Grid& corrected, const Grid& reference) {
    require_same_geometry(corrected, reference, "abs_error_grid");
    Grid out(corrected.geometry(), corrected.nodata());
    for (std::size_t i = 0; i < corrected.size(); ++i)
        if (corrected.valid(i) && reference.valid(i)) out[i] = std::abs(corrected[i] - reference[i]);
    return out;
}

namespace {

struct Accumulator {
    std::vector<double> before;
    std::vector<std::vector<double>> after;
};

StratumReport summarize(const Accumulator& acc, const std::vector<std::string>& models,
                        std::optional<int> label, std::string name, std::vector<std::string>& warnings) {
    StratumReport s;
    s.label = label;
    s.name = std::move(name);
    s.before = compute_metrics(acc.before);
    for (std::size_t m = 0; m < models.size(); ++m) {
        const Metrics after = compute_metrics(acc.after[m]);
        s.after[models[m]] = after;
        if (s.before.rmse > 0.0)
            s.pct_reduction[models[m]] = pct_rmse_reduction(s.before.rmse, after.rmse);
    }
    if (!(s.before.rmse > 0.0))
        warnings.push_back(s.name + ": original RMSE is zero; reductions undefined");
    return s;
}

}  // namespace

EvaluationReport build_report(const Grid& reference, const Grid& original,
                              const std::vector<NamedGrid>& corrected_by_model, const Grid& strata,
                              const Grid* evaluation_mask, std::map<std::string, std::string> provenance) {
    require_same_geometry(reference, original, "build_report original");
    require_same_geometry(reference, strata, "build_report strata");
    if (evaluation_mask) require_same_geometry(reference, *evaluation_mask, "build_report mask");
    for (const auto& [name, g] : corrected_by_model) require_same_geometry(reference, g, "corrected '" + name + "'");

    EvaluationReport report;
    report.provenance = std::move(provenance);
    for (const auto& [name, g] : corrected_by_model) {
        if (std::find(report.models.begin(), report.models.end(), name) != report.models.end())
            throw DomainError("duplicate model name '" + name + "'");
        report.models.push_back(name);
    }
    const std::size_t nm = report.models.size();

    std::set<int> labels;
    for (auto l : kLandscapes) labels.insert(static_cast<int>(l));
    for (std::size_t i = 0; i < strata.size(); ++i)
        if (strata.valid(i)) labels.insert(static_cast<int>(std::lround(strata[i])));

    std::map<int, Accumulator> per_label;
    for (int l : labels) per_label[l].after.resize(nm);
    Accumulator overall;
    overall.after.resize(nm);

    // Row-major enumeration fixes the summation order.
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (!reference.valid(i) || !original.valid(i)) continue;
        if (evaluation_mask && (!evaluation_mask->valid(i) || (*evaluation_mask)[i] != 1.0)) continue;
        bool ok = true;
        for (const auto& [name, g] : corrected_by_model) ok = ok && g.valid(i);
        if (!ok) continue;

        const double before = original[i] - reference[i];
        Accumulator* stratum_acc = strata.valid(i) ? &per_label[static_cast<int>(std::lround(strata[i]))] : nullptr;
        overall.before.push_back(before);
        if (stratum_acc) stratum_acc->before.push_back(before);
        for (std::size_t m = 0; m < nm; ++m) {
            const double after = corrected_by_model[m].second[i] - reference[i];
            overall.after[m].push_back(after);
            if (stratum_acc) stratum_acc->after[m].push_back(after);
        }
    }

    for (const auto& [label, acc] : per_label) {
        if (acc.before.empty()) {
            report.warnings.push_back(landscape_name(label) + " omitted: no common valid cells");
            continue;
        }
        report.strata.push_back(summarize(acc, report.models, label, landscape_name(label), report.warnings));
    }
    if (overall.before.empty()) throw EmptyTableError("build_report: no common valid cells");
    report.overall = summarize(overall, report.models, std::nullopt, "Overall", report.warnings);
    return report;
}

std::string render_table(const EvaluationReport& report) {
    std::size_t name_width = std::string("Landscape").size();
    for (const auto& s : report.strata) name_width = std::max(name_width, s.name.size());
    std::vector<std::size_t> widths;
    for (const auto& m : report.models) widths.push_back(std::max<std::size_t>(m.size(), 7));

    auto cell = [](const StratumReport& s, const std::string& model) {
        const auto it = s.pct_reduction.find(model);
        if (it == s.pct_reduction.end()) return std::string("n/a");
        std::ostringstream v;
        v << std::fixed << std::setprecision(1) << it->second;
        return v.str();
    };

    std::ostringstream out;
    out << "Percentage reduction in RMSE of the original DEM after correction\n";
    out << std::left << std::setw(static_cast<int>(name_width)) << "Landscape";
    for (std::size_t m = 0; m < report.models.size(); ++m)
        out << "  " << std::right << std::setw(static_cast<int>(widths[m])) << report.models[m];
    out << '\n';
    for (const auto& s : report.strata) {
        out << std::left << std::setw(static_cast<int>(name_width)) << s.name;
        for (std::size_t m = 0; m < report.models.size(); ++m)
            out << "  " << std::right << std::setw(static_cast<int>(widths[m])) << cell(s, report.models[m]);
        out << '\n';
    }
    out << "\nOverall (n=" << report.overall.before.n << "):";
    for (const auto& m : report.models) out << ' ' << m << '=' << cell(report.overall, m);
    out << '\n';
    return out.str();
}

}  // namespace demcorrect
