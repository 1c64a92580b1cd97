#include "demcorrect/grid.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "demcorrect/errors.hpp"

namespace demcorrect {

namespace {

bool close_rel(double a, double b) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= 1e-9 * scale;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::optional<double> parse_real(std::string_view token) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

constexpr std::array<std::string_view, 6> kHeaderKeys = {
    "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"};

}  // namespace

bool same_geometry(const GridGeometry& a, const GridGeometry& b) {
    return a.ncols == b.ncols && a.nrows == b.nrows && close_rel(a.xll, b.xll) &&
           close_rel(a.yll, b.yll) && close_rel(a.cellsize, b.cellsize);
}

Grid::Grid(const GridGeometry& geometry, double nodata)
    : Grid(geometry, nodata, nodata) {}

Grid::Grid(const GridGeometry& geometry, double nodata, double fill)
    : geometry_(geometry), nodata_(nodata), values_(geometry.cell_count(), fill) {
    validate();
}

Grid::Grid(const GridGeometry& geometry, double nodata, std::vector<double> values)
    : geometry_(geometry), nodata_(nodata), values_(std::move(values)) {
    validate();
}

std::size_t Grid::valid_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [&](double v) { return !is_nodata(v); }));
}

void Grid::validate() const {
    if (geometry_.ncols == 0 || geometry_.nrows == 0)
        throw DomainError("grid dimensions must be positive");
    if (!(geometry_.cellsize > 0.0) || !std::isfinite(geometry_.cellsize))
        throw DomainError("grid cellsize must be strictly positive");
    if (!std::isfinite(geometry_.xll) || !std::isfinite(geometry_.yll))
        throw DomainError("grid origin must be finite");
    if (!std::isfinite(nodata_)) throw DomainError("nodata sentinel must be finite");
    if (values_.size() != geometry_.cell_count())
        throw DomainError("grid holds " + std::to_string(values_.size()) + " values, expected " +
                          std::to_string(geometry_.cell_count()));
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("grid contains a non-finite value");
}

bool operator==(const Grid& a, const Grid& b) {
    const auto& ga = a.geometry_;
    const auto& gb = b.geometry_;
    return ga.ncols == gb.ncols && ga.nrows == gb.nrows && ga.xll == gb.xll &&
           ga.yll == gb.yll && ga.cellsize == gb.cellsize && a.nodata_ == b.nodata_ &&
           a.values_ == b.values_ && a.crs_label_ == b.crs_label_;
}

void require_same_geometry(const Grid& a, const Grid& b, std::string_view what) {
    if (!same_geometry(a.geometry(), b.geometry()))
        throw DomainError(std::string(what) + ": grid geometries differ");
}

std::string format_real(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

Grid read_ascii_grid(std::istream& in) {
    std::array<std::optional<double>, 6> header{};
    std::string line;
    std::size_t line_no = 0;

    for (int h = 0; h < 6; ++h) {
        if (!std::getline(in, line)) throw ParseError(line_no + 1, "truncated header");
        ++line_no;
        const auto tokens = split_ws(line);
        if (tokens.size() != 2) throw ParseError(line_no, "expected '<keyword> <value>'");
        const std::string key = lower(tokens[0]);
        const auto it = std::find(kHeaderKeys.begin(), kHeaderKeys.end(), key);
        if (it == kHeaderKeys.end())
            throw ParseError(line_no, "unknown header keyword '" + std::string(tokens[0]) + "'");
        const auto slot = static_cast<std::size_t>(it - kHeaderKeys.begin());
        if (header[slot]) throw ParseError(line_no, "duplicate header keyword '" + key + "'");
        const auto value = parse_real(tokens[1]);
        if (!value) throw ParseError(line_no, "non-numeric header value '" + std::string(tokens[1]) + "'");
        header[slot] = value;
    }

    auto count = [&](std::size_t slot) -> std::size_t {
        const double v = *header[slot];
        if (v < 1.0 || v != std::floor(v))
            throw ParseError(slot + 1, std::string(kHeaderKeys[slot]) + " must be a positive integer");
        return static_cast<std::size_t>(v);
    };

    GridGeometry geom;
    geom.ncols = count(0);
    geom.nrows = count(1);
    geom.xll = *header[2];
    geom.yll = *header[3];
    geom.cellsize = *header[4];
    if (!(geom.cellsize > 0.0)) throw ParseError(6, "cellsize must be positive");
    const double nodata = *header[5];

    std::vector<double> values;
    const std::size_t expected = geom.cell_count();
    values.reserve(expected);
    while (std::getline(in, line)) {
        ++line_no;
        for (auto token : split_ws(line)) {
            const auto v = parse_real(token);
            if (!v) throw ParseError(line_no, "non-numeric value '" + std::string(token) + "'");
            if (values.size() == expected)
                throw ParseError(line_no, "more values than ncols*nrows = " + std::to_string(expected));
            values.push_back(*v);
        }
    }
    if (values.size() != expected)
        throw ParseError(line_no, "found " + std::to_string(values.size()) +
                                      " values, expected ncols*nrows = " + std::to_string(expected));
    return Grid(geom, nodata, std::move(values));
}

Grid read_ascii_grid_string(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read_ascii_grid(in);
}

Grid read_ascii_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open raster '" + path + "'");
    try {
        return read_ascii_grid(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path + ": " + e.detail());
    }
}

void write_ascii_grid(std::ostream& out, const Grid& grid) {
    const auto& g = grid.geometry();
    out << "ncols " << g.ncols << '\n'
        << "nrows " << g.nrows << '\n'
        << "xllcorner " << format_real(g.xll) << '\n'
        << "yllcorner " << format_real(g.yll) << '\n'
        << "cellsize " << format_real(g.cellsize) << '\n'
        << "NODATA_value " << format_real(grid.nodata()) << '\n';
    std::string row;
    for (std::size_t r = 0; r < g.nrows; ++r) {
        row.clear();
        for (std::size_t c = 0; c < g.ncols; ++c) {
            if (c) row.push_back(' ');
            row += format_real(grid(r, c));
        }
        row.push_back('\n');
        out << row;
    }
}

std::string write_ascii_grid_string(const Grid& grid) {
    std::ostringstream out;
    write_ascii_grid(out, grid);
    return out.str();
}

void write_ascii_grid_file(const std::string& path, const Grid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write raster '" + path + "'");
    write_ascii_grid(out, grid);
    if (!out) throw IoError("failed writing raster '" + path + "'");
}

namespace {

// Splits a fractional lattice coordinate into base index and weight, snapping
// weights within 1e-9 of a lattice point so on-grid sampling is exact.
std::pair<std::size_t, double> lattice(double u, std::size_t n) {
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    double base = std::floor(u);
    double w = u - base;
    if (w < 1e-9) {
        w = 0.0;
    } else if (w > 1.0 - 1e-9) {
        base += 1.0;
        w = 0.0;
    }
    return {static_cast<std::size_t>(base), w};
}

}  // namespace

Grid align_to(const Grid& reference, const Grid& source, ResampleMethod method) {
    const auto& rg = reference.geometry();
    const auto& sg = source.geometry();
    const double ox = std::min(rg.x_max(), sg.x_max()) - std::max(rg.xll, sg.xll);
    const double oy = std::min(rg.y_max(), sg.y_max()) - std::max(rg.yll, sg.yll);
    if (!(ox > 0.0) || !(oy > 0.0)) throw DomainError("align_to: source does not overlap reference");

    Grid out(rg, source.nodata());
    const double nodata = source.nodata();
    for (std::size_t r = 0; r < rg.nrows; ++r) {
        const double fy = (sg.y_max() - rg.cell_center_y(r)) / sg.cellsize;
        for (std::size_t c = 0; c < rg.ncols; ++c) {
            const double fx = (rg.cell_center_x(c) - sg.xll) / sg.cellsize;
            if (fx < 0.0 || fy < 0.0 || fx >= static_cast<double>(sg.ncols) ||
                fy >= static_cast<double>(sg.nrows))
                continue;
            if (method == ResampleMethod::nearest) {
                out(r, c) = source(static_cast<std::size_t>(fy), static_cast<std::size_t>(fx));
                continue;
            }
            const auto [c0, wx] = lattice(fx - 0.5, sg.ncols);
            const auto [r0, wy] = lattice(fy - 0.5, sg.nrows);
            double acc = 0.0;
            bool ok = true;
            for (int dy = 0; dy <= 1 && ok; ++dy) {
                const double wr = dy ? wy : 1.0 - wy;
                if (wr == 0.0) continue;
                for (int dx = 0; dx <= 1; ++dx) {
                    const double wc = dx ? wx : 1.0 - wx;
                    if (wc == 0.0) continue;
                    const double v = source(r0 + dy, c0 + dx);
                    if (v == nodata) {
                        ok = false;
                        break;
                    }
                    acc += wr * wc * v;
                }
            }
            if (ok) out(r, c) = acc;
        }
    }
    return out;
}

Grid difference(const Grid& a, const Grid& b) {
    require_same_geometry(a, b, "difference");
    Grid out(a.geometry(), a.nodata());
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.valid(i) && b.valid(i)) out[i] = a[i] - b[i];
    return out;
}

}  // namespace demcorrect
