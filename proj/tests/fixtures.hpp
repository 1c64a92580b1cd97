#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "demcorrect/dataset.hpp"

namespace fixture {

/// Table from feature rows and targets; strata optional.
inline demcorrect::SampleTable table(std::vector<std::string> names, const std::vector<std::vector<double>>& x,
                                     const std::vector<double>& y, const std::vector<int>& strata = {}) {
    demcorrect::SampleTable t;
    t.feature_names = std::move(names);
    for (std::size_t i = 0; i < x.size(); ++i) {
        demcorrect::Sample s;
        s.row = i;
        s.col = 0;
        s.features = x[i];
        s.target = y[i];
        if (!strata.empty()) s.stratum = strata[i];
        t.rows.push_back(std::move(s));
    }
    return t;
}

inline demcorrect::SampleTable random_table(std::uint64_t seed, std::size_t rows, std::size_t features) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < features; ++j) names.push_back("f" + std::to_string(j));
    std::vector<std::vector<double>> x(rows, std::vector<double>(features));
    std::vector<double> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        for (auto& v : x[i]) v = n(rng) * 3.0 + 1.0;
        y[i] = n(rng) * 5.0 + 2.0;
    }
    return table(names, x, y);
}

}  // namespace fixture
