#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "minexp/errors.hpp"

namespace minexp::fieldgen {

// Uniform spatial grid over a rectangular workspace plus the time
// discretization. n_time_steps == 1 means a static field. Grid points span
// the extent inclusively: column 0 sits at extent_min.x, the last column at
// extent_max.x (degenerate single-row/column axes pin to extent_min).
struct GridSpec {
    int rows = 0;
    int cols = 0;
    std::array<double, 2> extent_min{-1.0, -1.0};
    std::array<double, 2> extent_max{1.0, 1.0};
    int n_time_steps = 1;
    double dt = 1.0;

    int n_cells() const { return rows * cols; }
    bool dynamic() const { return n_time_steps > 1; }

    int cell_of(int row, int col) const { return row * cols + col; }
    int row_of(int cell) const { return cell / cols; }
    int col_of(int cell) const { return cell % cols; }
    bool valid_cell(int cell) const { return cell >= 0 && cell < n_cells(); }

    double x_of_col(int col) const {
        return cols > 1 ? extent_min[0] + (extent_max[0] - extent_min[0]) * col / (cols - 1)
                        : extent_min[0];
    }
    double y_of_row(int row) const {
        return rows > 1 ? extent_min[1] + (extent_max[1] - extent_min[1]) * row / (rows - 1)
                        : extent_min[1];
    }
    std::array<double, 2> coord(int cell) const {
        return {x_of_col(col_of(cell)), y_of_row(row_of(cell))};
    }
    double diagonal() const {
        return std::hypot(extent_max[0] - extent_min[0], extent_max[1] - extent_min[1]);
    }

    bool operator==(const GridSpec&) const = default;

    void validate() const;  // throws input_error
};

// Generation record for one static RBF field:
//   c(x) = offset + sum_k coefficients[k] * exp(-|x - centers[k]|^2 / (2 widths[k]^2))
struct RbfMeta {
    double offset = 1.0;
    std::vector<std::array<double, 2>> centers;
    std::vector<double> widths;
    std::vector<double> coefficients;
    std::uint64_t seed = 0;
    int attempts = 1;
};

// Threat intensity c(x, t) sampled on the grid. Strictly positive
// everywhere. values is slice-major: values[t * n_cells + cell].
struct ThreatField {
    GridSpec grid;
    std::vector<double> values;
    std::vector<RbfMeta> rbf_meta;  // one entry per endpoint field; empty if hand-built

    // Lookup with the time index clamped at the final slice.
    double at(int cell, int t) const {
        const int tc = t >= grid.n_time_steps ? grid.n_time_steps - 1 : t;
        return values[static_cast<std::size_t>(tc) * grid.n_cells() + cell];
    }

    double max_value() const;
    double min_value() const;

    void validate() const;  // throws input_error
};

struct RbfParams {
    double offset = 1.0;  // c0
    // Coefficient range; the lower bound defaults to -0.9 * offset / max(n_rbf, 1)
    // when left at NaN.
    double coeff_min = std::numeric_limits<double>::quiet_NaN();
    double coeff_max = 5.0;
    // RBF widths, as fractions of the mean extent span.
    double width_min_frac = 0.1;
    double width_max_frac = 0.5;
    // Sampled values are clamped so the grid minimum stays >= floor_frac * offset.
    double floor_frac = 0.05;
    int max_attempts = 100;
};

// Random static field: offset plus n_rbf Gaussian bumps with seeded centers,
// widths and coefficients. Coefficient draws that push any grid sample to
// zero or below are rejected and redrawn from a fresh substream.
ThreatField generate_static_field(std::uint64_t seed, const GridSpec& grid, int n_rbf,
                                  const RbfParams& params = {});

// Random dynamic field: linear interpolation in time between two seeded
// static endpoint fields. The first and last slices equal the endpoints
// exactly.
ThreatField generate_dynamic_field(std::uint64_t seed, const GridSpec& grid, int n_rbf,
                                   const RbfParams& params = {});

// Deterministic field from explicit RBF parameters (no clamping, no
// rejection; caller is responsible for positivity).
ThreatField field_from_rbfs(const GridSpec& grid, const RbfMeta& meta);

// Bounds-checked sample with time clamped at the final slice.
double sample_field(const ThreatField& field, int cell, int t);

}  // namespace minexp::fieldgen
