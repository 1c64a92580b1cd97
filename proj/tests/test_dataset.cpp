#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "demcorrect/dataset.hpp"
#include "demcorrect/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace demcorrect;

namespace {

FeatureStack two_layer_stack(std::size_t n) {
    const Grid a = oracle::plane(n, 1.0, [](double x, double y) { return x * 10 + y; });
    const Grid b = oracle::plane(n, 1.0, [](double x, double) { return -x; });
    return FeatureStack({"a", "b"}, {a, b});
}

std::set<std::pair<std::size_t, std::size_t>> cells(const SampleTable& t) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (const auto& s : t.rows) out.emplace(s.row, s.col);
    return out;
}

SampleTable labeled(std::size_t n, const std::vector<int>& strata) {
    std::vector<std::vector<double>> x(n, std::vector<double>{0.0});
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) x[i][0] = y[i] = static_cast<double>(i);
    return fixture::table({"x"}, x, y, strata);
}

}  // namespace

TEST(ExtractSamples, FullRateDropsOnlyNodata) {
    FeatureStack stack = two_layer_stack(6);
    const Grid target(stack.geometry(), -9999.0, 1.5);
    const SampleTable all = extract_samples(stack, target, nullptr, 1.0, 1);
    EXPECT_EQ(all.size(), 36u);

    // Border cells lost to focal nodata, as with slope.
    const Grid s = slope(oracle::plane(6, 1.0, [](double x, double) { return x; }));
    const FeatureStack with_slope({"slope", "a"}, {s, stack.layers()[0]});
    EXPECT_EQ(extract_samples(with_slope, target, nullptr, 1.0, 1).size(), 16u);
}

TEST(ExtractSamples, NodataFeatureNeverEmitted) {
    Grid a = oracle::plane(5, 1.0, [](double x, double) { return x; });
    a(2, 3) = a.nodata();
    const Grid target(a.geometry(), -9999.0, 0.0);
    const SampleTable t = extract_samples(FeatureStack({"a"}, {a}), target, nullptr, 1.0, 0);
    EXPECT_EQ(t.size(), 24u);
    EXPECT_EQ(cells(t).count({2, 3}), 0u);
}

TEST(ExtractSamples, SeededRateIsExactAndRepeatable) {
    // 1000 valid cells from a 40 x 25 stack.
    const Grid a(GridGeometry{40, 25, 0, 0, 1}, -9999.0, 2.0);
    const FeatureStack stack({"a"}, {a});
    const Grid target(a.geometry(), -9999.0, 0.0);
    const SampleTable t1 = extract_samples(stack, target, nullptr, 0.5, 7);
    const SampleTable t2 = extract_samples(stack, target, nullptr, 0.5, 7);
    const SampleTable t3 = extract_samples(stack, target, nullptr, 0.5, 8);
    EXPECT_EQ(t1.size(), 500u);
    EXPECT_EQ(cells(t1), cells(t2));
    EXPECT_NE(cells(t1), cells(t3));
    for (std::size_t i = 1; i < t1.size(); ++i)
        EXPECT_LT(std::make_pair(t1.rows[i - 1].row, t1.rows[i - 1].col),
                  std::make_pair(t1.rows[i].row, t1.rows[i].col));
}

TEST(ExtractSamples, CarriesTargetsAndStrata) {
    const FeatureStack stack = two_layer_stack(4);
    const Grid target = oracle::plane(4, 1.0, [](double x, double y) { return x - y; });
    const Grid strata(stack.geometry(), -9999.0, 3.0);
    const SampleTable t = extract_samples(stack, target, &strata, 1.0, 0);
    for (const auto& s : t.rows) {
        EXPECT_EQ(s.target, target(s.row, s.col));
        EXPECT_EQ(s.features[0], stack.layers()[0](s.row, s.col));
        EXPECT_EQ(s.stratum, 3);
    }
}

TEST(ExtractSamples, RejectsBadRate) {
    const FeatureStack stack = two_layer_stack(3);
    const Grid target(stack.geometry(), -9999.0, 0.0);
    EXPECT_THROW(extract_samples(stack, target, nullptr, 0.0, 0), DomainError);
    EXPECT_THROW(extract_samples(stack, target, nullptr, 1.5, 0), DomainError);
}

TEST(Split, TenRowsEightTwo) {
    const SplitResult r = split(labeled(10, {}), 0.8, 3, false);
    EXPECT_EQ(r.train.size(), 8u);
    EXPECT_EQ(r.test.size(), 2u);
}

TEST(Split, SameSeedSamePartition) {
    const SampleTable t = labeled(37, {});
    EXPECT_EQ(cells(split(t, 0.7, 9, false).train), cells(split(t, 0.7, 9, false).train));
    EXPECT_NE(cells(split(t, 0.7, 9, false).train), cells(split(t, 0.7, 10, false).train));
}

TEST(Split, StratifiedFiftyFifty) {
    std::vector<int> strata(100);
    for (std::size_t i = 0; i < 100; ++i) strata[i] = i < 50 ? 1 : 2;
    const SplitResult r = split(labeled(100, strata), 0.8, 5, true);
    std::map<int, int> train, test;
    for (const auto& s : r.train.rows) ++train[*s.stratum];
    for (const auto& s : r.test.rows) ++test[*s.stratum];
    EXPECT_EQ(train[1], 40);
    EXPECT_EQ(train[2], 40);
    EXPECT_EQ(test[1], 10);
    EXPECT_EQ(test[2], 10);
}

TEST(Split, TinyStratumGoesToTrainWithWarning) {
    std::vector<int> strata(21, 1);
    strata[20] = 4;
    const SplitResult r = split(labeled(21, strata), 0.5, 1, true);
    EXPECT_FALSE(r.warnings.empty());
    bool found = false;
    for (const auto& s : r.train.rows) found |= (s.stratum == 4);
    EXPECT_TRUE(found);
}

TEST(SplitProperty, PartitionIsDisjointAndComplete) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<int> strata(53);
        for (std::size_t i = 0; i < strata.size(); ++i) strata[i] = static_cast<int>(i * 7 % 5) + 1;
        const SampleTable t = labeled(53, strata);
        for (bool stratified : {false, true}) {
            const SplitResult r = split(t, 0.3 + 0.02 * static_cast<double>(seed), seed, stratified);
            const auto a = cells(r.train), b = cells(r.test);
            EXPECT_EQ(a.size() + b.size(), t.size());
            for (const auto& c : a) EXPECT_EQ(b.count(c), 0u);
        }
    }
}

TEST(Split, RejectsBadFractionAndEmptyTable) {
    EXPECT_THROW(split(labeled(5, {}), 0.0, 0, false), DomainError);
    EXPECT_THROW(split(labeled(5, {}), 1.0, 0, false), DomainError);
    EXPECT_THROW(split(SampleTable{{"x"}, {}}, 0.5, 0, false), EmptyTableError);
}

TEST(SamplesCsv, RoundTrip) {
    SampleTable t = labeled(4, {1, 2, 3, 5});
    t.rows[2].stratum.reset();
    t.rows[1].target = 0.1;
    t.rows[3].features[0] = -1e-300;
    std::stringstream ss;
    write_samples_csv(ss, t);
    const SampleTable back = read_samples_csv(ss);
    ASSERT_EQ(back.size(), t.size());
    EXPECT_EQ(back.feature_names, t.feature_names);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(back.rows[i].features, t.rows[i].features);
        EXPECT_EQ(back.rows[i].target, t.rows[i].target);
        EXPECT_EQ(back.rows[i].stratum, t.rows[i].stratum);
    }
}
