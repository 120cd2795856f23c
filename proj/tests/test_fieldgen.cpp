#include <doctest.h>

#include <cmath>

#include "minexp/fieldgen.hpp"

using namespace minexp;
using namespace minexp::fieldgen;

namespace {
const GridSpec kGrid25{25, 25, {-1, -1}, {1, 1}, 1, 1.0};
}

TEST_CASE("static field: positive, right size, reproducible") {
    const ThreatField field = generate_static_field(7, kGrid25, 10);
    CHECK(field.values.size() == 625);
    CHECK(field.min_value() > 0.0);

    const ThreatField again = generate_static_field(7, kGrid25, 10);
    CHECK(field.values == again.values);  // bit-identical
}

TEST_CASE("different seeds give different fields") {
    const ThreatField a = generate_static_field(7, kGrid25, 10);
    const ThreatField b = generate_static_field(8, kGrid25, 10);
    CHECK(a.values != b.values);
}

TEST_CASE("zero RBFs leave the constant offset") {
    const ThreatField field = generate_static_field(1, kGrid25, 0);
    for (double v : field.values) CHECK(v == 1.0);
}

TEST_CASE("invalid grids are rejected") {
    GridSpec bad = kGrid25;
    bad.rows = 0;
    CHECK_THROWS_AS(generate_static_field(1, bad, 4), input_error);
    GridSpec one_cell{1, 1, {-1, -1}, {1, 1}, 1, 1.0};
    CHECK_THROWS_AS(generate_static_field(1, one_cell, 4), input_error);
}

TEST_CASE("dynamic field endpoints and interpolation") {
    GridSpec grid = kGrid25;
    grid.n_time_steps = 50;
    const ThreatField field = generate_dynamic_field(21, grid, 10);
    const int n = grid.n_cells();
    REQUIRE(field.values.size() == static_cast<std::size_t>(n) * 50);

    // Every slice strictly positive.
    CHECK(field.min_value() > 0.0);

    // Interpolation consistency against the endpoint slices.
    for (int t = 0; t < 50; ++t) {
        const double alpha = t / 49.0;
        for (int cell = 0; cell < n; cell += 37) {
            const double a = field.values[cell];
            const double b = field.values[static_cast<std::size_t>(49) * n + cell];
            const double expected = a + alpha * (b - a);
            CHECK(field.at(cell, t) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("dynamic field with three steps has means in the middle") {
    GridSpec grid{4, 4, {-1, -1}, {1, 1}, 3, 1.0};
    const ThreatField field = generate_dynamic_field(5, grid, 6);
    for (int cell = 0; cell < grid.n_cells(); ++cell) {
        const double mid = 0.5 * (field.at(cell, 0) + field.at(cell, 2));
        CHECK(field.at(cell, 1) == doctest::Approx(mid).epsilon(1e-12));
    }
}

TEST_CASE("dynamic generation needs at least two time steps") {
    CHECK_THROWS_AS(generate_dynamic_field(3, kGrid25, 5), input_error);
}

TEST_CASE("sample_field clamps time and validates the cell") {
    const ThreatField st = generate_static_field(2, kGrid25, 5);
    CHECK(sample_field(st, 0, 0) == st.values[0]);
    CHECK(sample_field(st, 10, 999) == sample_field(st, 10, 0));

    GridSpec grid{5, 5, {-1, -1}, {1, 1}, 4, 1.0};
    const ThreatField dyn = generate_dynamic_field(2, grid, 5);
    CHECK(sample_field(dyn, 3, 14) == sample_field(dyn, 3, 3));
    CHECK_THROWS_AS(sample_field(st, -1, 0), input_error);
    CHECK_THROWS_AS(sample_field(st, 625, 0), input_error);
    CHECK_THROWS_AS(sample_field(st, 0, -1), input_error);
}

TEST_CASE("grid coordinates span the extent inclusively") {
    CHECK(kGrid25.coord(0) == std::array<double, 2>{-1.0, -1.0});
    CHECK(kGrid25.coord(624) == std::array<double, 2>{1.0, 1.0});
    CHECK(kGrid25.coord(12 * 25 + 12) == std::array<double, 2>{0.0, 0.0});
    CHECK(kGrid25.diagonal() == doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("explicit RBF construction matches the formula") {
    GridSpec grid{3, 3, {-1, -1}, {1, 1}, 1, 1.0};
    RbfMeta meta;
    meta.offset = 2.0;
    meta.centers = {{0.0, 0.0}};
    meta.widths = {0.5};
    meta.coefficients = {3.0};
    const ThreatField field = field_from_rbfs(grid, meta);
    CHECK(field.at(4, 0) == doctest::Approx(5.0));  // center cell: offset + coeff
    const double corner = 2.0 + 3.0 * std::exp(-2.0 / 0.5);
    CHECK(field.at(0, 0) == doctest::Approx(corner).epsilon(1e-12));
}
