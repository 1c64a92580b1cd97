#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace demcorrect {

/// Raster extent and resolution. Rows run north to south, columns west to east.
struct GridGeometry {
    std::size_t ncols = 0;
    std::size_t nrows = 0;
    double xll = 0.0;  ///< west edge
    double yll = 0.0;  ///< south edge
    double cellsize = 1.0;

    std::size_t cell_count() const noexcept { return ncols * nrows; }
    double x_max() const noexcept { return xll + static_cast<double>(ncols) * cellsize; }
    double y_max() const noexcept { return yll + static_cast<double>(nrows) * cellsize; }
    double cell_center_x(std::size_t col) const noexcept {
        return xll + (static_cast<double>(col) + 0.5) * cellsize;
    }
    double cell_center_y(std::size_t row) const noexcept {
        return y_max() - (static_cast<double>(row) + 0.5) * cellsize;
    }
};

/// Equal counts, reals within 1e-9 relative tolerance.
bool same_geometry(const GridGeometry& a, const GridGeometry& b);

/// Single-band raster, row-major with the northernmost row first.
///
/// Every stored value is either finite or exactly the nodata sentinel.
class Grid {
public:
    static constexpr double kDefaultNodata = -9999.0;

    Grid() = default;
    /// Allocates a grid filled with `fill` (nodata by default).
    explicit Grid(const GridGeometry& geometry, double nodata = kDefaultNodata);
    Grid(const GridGeometry& geometry, double nodata, double fill);
    Grid(const GridGeometry& geometry, double nodata, std::vector<double> values);

    const GridGeometry& geometry() const noexcept { return geometry_; }
    std::size_t ncols() const noexcept { return geometry_.ncols; }
    std::size_t nrows() const noexcept { return geometry_.nrows; }
    std::size_t size() const noexcept { return values_.size(); }
    double nodata() const noexcept { return nodata_; }

    const std::optional<std::string>& crs_label() const noexcept { return crs_label_; }
    void set_crs_label(std::optional<std::string> label) { crs_label_ = std::move(label); }

    double operator()(std::size_t row, std::size_t col) const noexcept {
        return values_[row * geometry_.ncols + col];
    }
    double& operator()(std::size_t row, std::size_t col) noexcept {
        return values_[row * geometry_.ncols + col];
    }
    double operator[](std::size_t index) const noexcept { return values_[index]; }
    double& operator[](std::size_t index) noexcept { return values_[index]; }

    bool is_nodata(double v) const noexcept { return v == nodata_; }
    bool valid(std::size_t row, std::size_t col) const noexcept {
        return !is_nodata((*this)(row, col));
    }
    bool valid(std::size_t index) const noexcept { return !is_nodata(values_[index]); }

    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }

    std::size_t valid_count() const noexcept;

    /// Throws DomainError when an invariant is broken.
    void validate() const;

    friend bool operator==(const Grid& a, const Grid& b);

private:
    GridGeometry geometry_;
    double nodata_ = kDefaultNodata;
    std::vector<double> values_;
    std::optional<std::string> crs_label_;
};

/// Throws DomainError naming `what` unless the geometries match.
void require_same_geometry(const Grid& a, const Grid& b, std::string_view what);

// ESRI ASCII grid (ncols, nrows, xllcorner, yllcorner, cellsize, NODATA_value).
Grid read_ascii_grid(std::istream& in);
Grid read_ascii_grid_string(std::string_view text);
Grid read_ascii_grid_file(const std::string& path);
void write_ascii_grid(std::ostream& out, const Grid& grid);
std::string write_ascii_grid_string(const Grid& grid);
void write_ascii_grid_file(const std::string& path, const Grid& grid);

enum class ResampleMethod { nearest, bilinear };

/// Resample `source` onto the geometry of `reference` by sampling at output
/// cell centers. Cells outside `source` or touching nodata become nodata.
Grid align_to(const Grid& reference, const Grid& source, ResampleMethod method);

/// Per-cell a - b. Nodata in either input yields nodata (a's sentinel).
Grid difference(const Grid& a, const Grid& b);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double v);

}  // namespace demcorrect
