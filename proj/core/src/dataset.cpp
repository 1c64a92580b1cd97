#include "demcorrect/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "demcorrect/errors.hpp"
#include "demcorrect/numeric.hpp"

namespace demcorrect {

std::size_t SampleTable::feature_index(std::string_view name) const {
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end())
        throw DomainError("sample table has no feature '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - feature_names.begin());
}

std::vector<double> SampleTable::column(std::size_t feature) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& s : rows) out.push_back(s.features[feature]);
    return out;
}

std::vector<double> SampleTable::targets() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& s : rows) out.push_back(s.target);
    return out;
}

void SampleTable::validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& s = rows[i];
        if (s.features.size() != feature_names.size())
            throw DomainError("sample " + std::to_string(i) + " has " +
                              std::to_string(s.features.size()) + " features, expected " +
                              std::to_string(feature_names.size()));
        for (double v : s.features)
            if (!std::isfinite(v)) throw DomainError("sample " + std::to_string(i) + " has a non-finite feature");
        if (!std::isfinite(s.target)) throw DomainError("sample " + std::to_string(i) + " has a non-finite target");
    }
}

SampleTable extract_samples(const FeatureStack& stack, const Grid& target, const Grid* strata,
                            double rate, std::uint64_t seed) {
    if (!(rate > 0.0 && rate <= 1.0)) throw DomainError("sampling rate must lie in (0, 1]");
    if (stack.size() == 0) throw DomainError("cannot sample an empty feature stack");
    if (!same_geometry(stack.geometry(), target.geometry()))
        throw DomainError("target grid geometry differs from the feature stack");
    if (strata && !same_geometry(stack.geometry(), strata->geometry()))
        throw DomainError("strata grid geometry differs from the feature stack");

    const auto& layers = stack.layers();
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (!target.valid(i)) continue;
        const bool all = std::all_of(layers.begin(), layers.end(),
                                     [i](const Grid& g) { return g.valid(i); });
        if (all) valid.push_back(i);
    }
    if (valid.empty()) throw EmptyTableError("no cell has valid features and target");

    if (rate < 1.0) {
        const auto keep = static_cast<std::size_t>(std::llround(rate * static_cast<double>(valid.size())));
        // Partial Fisher-Yates selects `keep` distinct cells; sorting restores
        // row-major order.
        Rng rng(seed);
        for (std::size_t i = 0; i < keep; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(valid.size() - i));
            std::swap(valid[i], valid[j]);
        }
        valid.resize(keep);
        std::sort(valid.begin(), valid.end());
        if (valid.empty()) throw EmptyTableError("sampling rate selected no cells");
    }

    SampleTable table;
    table.feature_names = stack.names();
    table.rows.reserve(valid.size());
    const std::size_t ncols = target.ncols();
    for (std::size_t i : valid) {
        Sample s;
        s.row = i / ncols;
        s.col = i % ncols;
        s.features.reserve(layers.size());
        for (const auto& g : layers) s.features.push_back(g[i]);
        s.target = target[i];
        if (strata && strata->valid(i)) s.stratum = static_cast<int>(std::lround((*strata)[i]));
        table.rows.push_back(std::move(s));
    }
    return table;
}

namespace {

void shuffle(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

SampleTable subset(const SampleTable& table, std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    SampleTable out;
    out.feature_names = table.feature_names;
    out.rows.reserve(idx.size());
    for (auto i : idx) out.rows.push_back(table.rows[i]);
    return out;
}

std::string stratum_name(const std::optional<int>& s) {
    return s ? "stratum " + std::to_string(*s) : "unlabelled rows";
}

}  // namespace

SplitResult split(const SampleTable& table, double train_fraction, std::uint64_t seed,
                  bool stratified) {
    if (table.empty()) throw EmptyTableError("cannot split an empty table");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw DomainError("train_fraction must lie in (0, 1)");

    Rng rng(seed);
    SplitResult result;
    std::vector<std::size_t> train_idx, test_idx;

    if (!stratified) {
        std::vector<std::size_t> idx(table.size());
        std::iota(idx.begin(), idx.end(), 0);
        shuffle(idx, rng);
        const auto k = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(idx.size())));
        train_idx.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
        test_idx.assign(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
    } else {
        // std::map orders unlabelled rows (nullopt) first, then labels ascending.
        std::map<std::optional<int>, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < table.size(); ++i) groups[table.rows[i].stratum].push_back(i);

        struct Share {
            std::vector<std::size_t>* rows;
            std::size_t base;
            double remainder;
        };
        std::vector<Share> shares;
        std::size_t eligible = 0;
        for (auto& [label, rows] : groups) {
            if (rows.size() < 2) {
                result.warnings.push_back(stratum_name(label) + " has fewer than 2 rows; assigned to train");
                train_idx.insert(train_idx.end(), rows.begin(), rows.end());
                continue;
            }
            const double exact = train_fraction * static_cast<double>(rows.size());
            const double base = std::floor(exact);
            shares.push_back({&rows, static_cast<std::size_t>(base), exact - base});
            eligible += rows.size();
        }
        // Largest-remainder allocation hits round(eligible * f) exactly.
        const auto want = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(eligible)));
        std::size_t have = 0;
        for (const auto& s : shares) have += s.base;
        std::vector<std::size_t> order(shares.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return shares[a].remainder > shares[b].remainder;
        });
        for (std::size_t k = 0; have < want && k < order.size(); ++k, ++have) ++shares[order[k]].base;

        for (auto& s : shares) {
            shuffle(*s.rows, rng);
            const auto cut = s.rows->begin() + static_cast<std::ptrdiff_t>(s.base);
            train_idx.insert(train_idx.end(), s.rows->begin(), cut);
            test_idx.insert(test_idx.end(), cut, s.rows->end());
        }
    }

    result.train = subset(table, std::move(train_idx));
    result.test = subset(table, std::move(test_idx));
    return result;
}

void write_samples_csv(std::ostream& out, const SampleTable& table) {
    out << "row,col,stratum";
    for (const auto& n : table.feature_names) out << ',' << n;
    out << ",target\n";
    std::string line;
    for (const auto& s : table.rows) {
        line = std::to_string(s.row) + ',' + std::to_string(s.col) + ',';
        if (s.stratum) line += std::to_string(*s.stratum);
        for (double v : s.features) line += ',' + format_real(v);
        line += ',' + format_real(s.target) + '\n';
        out << line;
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <class T>
T parse_field(const std::string& f, std::size_t line, const char* what) {
    T v{};
    const auto* end = f.data() + f.size();
    auto [ptr, ec] = std::from_chars(f.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParseError(line, std::string("bad ") + what + " '" + f + "'");
    return v;
}

}  // namespace

SampleTable read_samples_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "missing CSV header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv(line);
    if (header.size() < 4 || header[0] != "row" || header[1] != "col" || header[2] != "stratum" ||
        header.back() != "target")
        throw ParseError(1, "CSV header must be row,col,stratum,<features...>,target");

    SampleTable table;
    table.feature_names.assign(header.begin() + 3, header.end() - 1);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields");
        Sample s;
        s.row = parse_field<std::size_t>(fields[0], line_no, "row");
        s.col = parse_field<std::size_t>(fields[1], line_no, "col");
        if (!fields[2].empty()) s.stratum = parse_field<int>(fields[2], line_no, "stratum");
        for (std::size_t k = 3; k + 1 < fields.size(); ++k) {
            const double v = parse_field<double>(fields[k], line_no, "feature value");
            if (!std::isfinite(v)) throw ParseError(line_no, "non-finite feature value");
            s.features.push_back(v);
        }
        s.target = parse_field<double>(fields.back(), line_no, "target");
        if (!std::isfinite(s.target)) throw ParseError(line_no, "non-finite target");
        table.rows.push_back(std::move(s));
    }
    return table;
}

}  // namespace demcorrect
