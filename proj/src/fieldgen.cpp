#include "minexp/fieldgen.hpp"

#include <algorithm>
#include <cmath>

#include "minexp/rng.hpp"

namespace minexp::fieldgen {

void GridSpec::validate() const {
    if (rows < 1 || cols < 1) throw input_error("grid must have at least one row and column");
    if (n_cells() <= 1) throw input_error("grid must have more than one cell");
    if (!(extent_min[0] < extent_max[0]) || !(extent_min[1] < extent_max[1])) {
        throw input_error("grid extent_min must be componentwise below extent_max");
    }
    if (n_time_steps < 1) throw input_error("grid needs at least one time step");
    if (!(dt > 0.0)) throw input_error("grid time step dt must be positive");
}

double ThreatField::max_value() const {
    return *std::max_element(values.begin(), values.end());
}

double ThreatField::min_value() const {
    return *std::min_element(values.begin(), values.end());
}

void ThreatField::validate() const {
    grid.validate();
    const std::size_t expected =
        static_cast<std::size_t>(grid.n_cells()) * static_cast<std::size_t>(grid.n_time_steps);
    if (values.size() != expected) {
        throw input_error("field value count does not match grid dimensions");
    }
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw input_error("threat field values must be strictly positive and finite");
        }
    }
}

namespace {

RbfMeta draw_rbfs(Rng& rng, const GridSpec& grid, int n_rbf, const RbfParams& params) {
    const double span = 0.5 * ((grid.extent_max[0] - grid.extent_min[0]) +
                               (grid.extent_max[1] - grid.extent_min[1]));
    const double coeff_lo = std::isnan(params.coeff_min)
                                ? -0.9 * params.offset / std::max(n_rbf, 1)
                                : params.coeff_min;
    RbfMeta meta;
    meta.offset = params.offset;
    meta.centers.reserve(n_rbf);
    meta.widths.reserve(n_rbf);
    meta.coefficients.reserve(n_rbf);
    for (int k = 0; k < n_rbf; ++k) {
        const double cx = rng.uniform(grid.extent_min[0], grid.extent_max[0]);
        const double cy = rng.uniform(grid.extent_min[1], grid.extent_max[1]);
        meta.centers.push_back({cx, cy});
        meta.widths.push_back(rng.uniform(params.width_min_frac * span, params.width_max_frac * span));
        meta.coefficients.push_back(rng.uniform(coeff_lo, params.coeff_max));
    }
    return meta;
}

std::vector<double> sample_rbfs(const GridSpec& grid, const RbfMeta& meta) {
    std::vector<double> values(grid.n_cells());
    for (int cell = 0; cell < grid.n_cells(); ++cell) {
        const auto [x, y] = grid.coord(cell);
        double v = meta.offset;
        for (std::size_t k = 0; k < meta.centers.size(); ++k) {
            const double dx = x - meta.centers[k][0];
            const double dy = y - meta.centers[k][1];
            const double s2 = 2.0 * meta.widths[k] * meta.widths[k];
            v += meta.coefficients[k] * std::exp(-(dx * dx + dy * dy) / s2);
        }
        values[cell] = v;
    }
    return values;
}

}  // namespace

ThreatField generate_static_field(std::uint64_t seed, const GridSpec& grid, int n_rbf,
                                  const RbfParams& params) {
    grid.validate();
    if (n_rbf < 0) throw input_error("n_rbf must be non-negative");
    if (!(params.offset > 0.0)) throw input_error("rbf offset must be positive");

    GridSpec static_grid = grid;
    static_grid.n_time_steps = 1;

    for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        RbfMeta meta = draw_rbfs(rng, static_grid, n_rbf, params);
        meta.seed = seed;
        meta.attempts = attempt + 1;
        std::vector<double> values = sample_rbfs(static_grid, meta);
        if (*std::min_element(values.begin(), values.end()) <= 0.0) continue;
        const double floor = params.floor_frac * params.offset;
        for (double& v : values) v = std::max(v, floor);
        ThreatField field{static_grid, std::move(values), {std::move(meta)}};
        return field;
    }
    throw input_error("field generation failed positivity rejection after " +
                      std::to_string(params.max_attempts) + " attempts");
}

ThreatField generate_dynamic_field(std::uint64_t seed, const GridSpec& grid, int n_rbf,
                                   const RbfParams& params) {
    grid.validate();
    if (grid.n_time_steps < 2) {
        throw input_error("dynamic field generation needs n_time_steps >= 2");
    }
    const ThreatField a = generate_static_field(derive_seed(seed, 1), grid, n_rbf, params);
    const ThreatField b = generate_static_field(derive_seed(seed, 2), grid, n_rbf, params);

    const int n = grid.n_cells();
    const int nt = grid.n_time_steps;
    ThreatField field;
    field.grid = grid;
    field.values.resize(static_cast<std::size_t>(n) * nt);
    field.rbf_meta = {a.rbf_meta.front(), b.rbf_meta.front()};
    for (int t = 0; t < nt; ++t) {
        double* slice = field.values.data() + static_cast<std::size_t>(t) * n;
        if (t == 0) {
            std::copy(a.values.begin(), a.values.end(), slice);
        } else if (t == nt - 1) {
            std::copy(b.values.begin(), b.values.end(), slice);
        } else {
            const double alpha = static_cast<double>(t) / (nt - 1);
            for (int cell = 0; cell < n; ++cell) {
                slice[cell] = a.values[cell] + alpha * (b.values[cell] - a.values[cell]);
            }
        }
    }
    return field;
}

ThreatField field_from_rbfs(const GridSpec& grid, const RbfMeta& meta) {
    grid.validate();
    GridSpec static_grid = grid;
    static_grid.n_time_steps = 1;
    ThreatField field{static_grid, sample_rbfs(static_grid, meta), {meta}};
    field.validate();
    return field;
}

double sample_field(const ThreatField& field, int cell, int t) {
    if (!field.grid.valid_cell(cell)) {
        throw input_error("sample_field: cell index out of range");
    }
    if (t < 0) throw input_error("sample_field: time step must be non-negative");
    return field.at(cell, t);
}

}  // namespace minexp::fieldgen
