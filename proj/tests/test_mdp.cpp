#include <doctest.h>

#include <cmath>

#include "minexp/mdp.hpp"

using namespace minexp;
using namespace minexp::mdp;

namespace {

const GridSpec kGrid25{25, 25, {-1, -1}, {1, 1}, 1, 1.0};

fieldgen::ThreatField uniform_field(const GridSpec& grid, double value) {
    fieldgen::ThreatField field;
    field.grid = grid;
    field.values.assign(static_cast<std::size_t>(grid.n_cells()) * grid.n_time_steps, value);
    return field;
}

}  // namespace

TEST_CASE("transitions at the grid boundary are invalid") {
    CHECK_FALSE(transition(State{0, 0}, Action::Left, kGrid25).has_value());
    CHECK_FALSE(transition(State{0, 0}, Action::Down, kGrid25).has_value());
    const auto up = transition(State{kGrid25.cell_of(5, 7), 0}, Action::Up, kGrid25);
    REQUIRE(up.has_value());
    CHECK(up->cell == kGrid25.cell_of(6, 7));  // one row toward +y, same column
}

TEST_CASE("dynamic transitions advance time by one step") {
    GridSpec grid = kGrid25;
    grid.n_time_steps = 50;
    const auto next = transition(State{12, 3}, Action::Right, grid);
    REQUIRE(next.has_value());
    CHECK(*next == State{13, 4});
}

TEST_CASE("neighbor counts: corner 2, edge 3, interior 4") {
    CHECK(neighbors(State{0, 0}, kGrid25).size() == 2);
    CHECK(neighbors(State{12, 0}, kGrid25).size() == 3);
    CHECK(neighbors(State{kGrid25.cell_of(10, 10), 0}, kGrid25).size() == 4);
}

TEST_CASE("static up/down moves are inverse of each other") {
    for (int cell = 0; cell < kGrid25.n_cells(); ++cell) {
        const auto up = transition(State{cell, 0}, Action::Up, kGrid25);
        if (!up) continue;
        const auto back = transition(*up, Action::Down, kGrid25);
        REQUIRE(back.has_value());
        CHECK(back->cell == cell);
    }
}

TEST_CASE("feature vectors have the variant-specific length") {
    const auto field = uniform_field(kGrid25, 1.0);
    const Goal goal = Goal::max_corner(kGrid25);
    CHECK(feature_vector(State{0, 0}, field, goal, FeatureVariant::Standard).size() == 10);
    CHECK(feature_vector(State{0, 0}, field, goal, FeatureVariant::SplitDistance).size() == 15);
}

TEST_CASE("own distance entry vanishes at the goal") {
    const auto field = uniform_field(kGrid25, 1.0);
    const Goal goal = Goal::max_corner(kGrid25);
    const auto phi = feature_vector(State{goal.cell, 0}, field, goal, FeatureVariant::Standard);
    CHECK(phi[1] == 0.0);
}

TEST_CASE("uniform field makes every threat entry equal") {
    const auto field = uniform_field(kGrid25, 1.0);
    const Goal goal = Goal::max_corner(kGrid25);
    const auto phi = feature_vector(State{30, 0}, field, goal, FeatureVariant::Standard);
    for (std::size_t i = 0; i < phi.size(); i += 2) CHECK(phi[i] == 1.0);
}

TEST_CASE("center-to-corner distance on a 3x3 grid is sqrt(2)") {
    GridSpec grid{3, 3, {-1, -1}, {1, 1}, 1, 1.0};
    const auto field = uniform_field(grid, 1.0);
    const Goal goal = Goal::max_corner(grid);
    const auto phi = feature_vector(State{4, 0}, field, goal, FeatureVariant::Standard);
    CHECK(phi[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("off-grid action blocks duplicate the state's own block") {
    GridSpec grid{3, 3, {-1, -1}, {1, 1}, 1, 1.0};
    auto field = uniform_field(grid, 1.0);
    field.values[0] = 3.5;
    const Goal goal = Goal::max_corner(grid);
    const auto phi = feature_vector(State{0, 0}, field, goal, FeatureVariant::Standard);
    // Down and Left exit the grid from the bottom-left corner.
    CHECK(phi[4] == phi[0]);
    CHECK(phi[5] == phi[1]);
    CHECK(phi[6] == phi[0]);
    CHECK(phi[7] == phi[1]);
}

TEST_CASE("reward equals the hand-computed linear combination") {
    // Two cells 1.2 apart, uniform threat 2.5, goal on the left cell.
    GridSpec grid{1, 2, {0, 0}, {1.2, 1.0}, 1, 1.0};
    const auto field = uniform_field(grid, 2.5);
    const Goal goal = Goal::at_cell(0, grid);
    const RewardWeights w{{-1.0, -1.0}, FeatureVariant::Standard};
    const State s{0, 0};
    const auto next = transition(s, Action::Right, grid);
    REQUIRE(next.has_value());
    CHECK(reward(s, Action::Right, *next, w, field, goal) == doctest::Approx(-3.7).epsilon(1e-12));
}

TEST_CASE("reward into the goal has no distance term") {
    GridSpec grid{3, 3, {-1, -1}, {1, 1}, 1, 1.0};
    const auto field = uniform_field(grid, 1.0);
    const Goal goal = Goal::max_corner(grid);
    const RewardWeights w{{-1.0, -1.0}, FeatureVariant::Standard};
    const State s{goal.cell - 1, 0};
    const auto next = transition(s, Action::Right, grid);
    REQUIRE(next.has_value());
    REQUIRE(next->cell == goal.cell);
    CHECK(reward(s, Action::Right, *next, w, field, goal) == doctest::Approx(-1.0));
}

TEST_CASE("zero weights give zero reward everywhere") {
    GridSpec grid{4, 4, {-1, -1}, {1, 1}, 1, 1.0};
    const auto field = uniform_field(grid, 2.0);
    const Goal goal = Goal::max_corner(grid);
    const RewardWeights w{{0.0, 0.0}, FeatureVariant::Standard};
    for (int cell = 0; cell < grid.n_cells(); ++cell) {
        for (const auto& [a, next] : neighbors(State{cell, 0}, grid)) {
            CHECK(reward(State{cell, 0}, a, next, w, field, goal) == 0.0);
        }
    }
}

TEST_CASE("invalid transitions are a contract violation") {
    GridSpec grid{3, 3, {-1, -1}, {1, 1}, 1, 1.0};
    const auto field = uniform_field(grid, 1.0);
    const Goal goal = Goal::max_corner(grid);
    const RewardWeights w{{-1.0, -1.0}, FeatureVariant::Standard};
    CHECK_THROWS_AS(reward(State{0, 0}, Action::Left, State{0, 0}, w, field, goal), input_error);
    CHECK_THROWS_AS(reward(State{0, 0}, Action::Up, State{8, 0}, w, field, goal), input_error);
}

TEST_CASE("reward matches the feature-block dot product for every valid move") {
    // Deterministic non-uniform field on a 5x5 grid, both variants, static
    // and dynamic.
    for (const bool dynamic : {false, true}) {
        GridSpec grid{5, 5, {-1, -1}, {1, 1}, dynamic ? 4 : 1, 1.0};
        fieldgen::ThreatField field = uniform_field(grid, 1.0);
        for (std::size_t i = 0; i < field.values.size(); ++i) {
            field.values[i] = 0.5 + 0.13 * static_cast<double>((i * 7919) % 97);
        }
        const Goal goal = Goal::max_corner(grid);
        for (const auto variant : {FeatureVariant::Standard, FeatureVariant::SplitDistance}) {
            const int block = feature_block_size(variant);
            RewardWeights w;
            w.variant = variant;
            w.w = variant == FeatureVariant::Standard ? std::vector<double>{-1.0, -0.3}
                                                      : std::vector<double>{-1.0, -0.3, -0.6};
            for (int t = 0; t < (dynamic ? 3 : 1); ++t) {
                for (int cell = 0; cell < grid.n_cells(); ++cell) {
                    const State s{cell, t};
                    const auto phi = feature_vector(s, field, goal, variant);
                    for (const auto& [a, next] : neighbors(s, grid)) {
                        double dot = 0.0;
                        const int offset = block * (1 + static_cast<int>(a));
                        for (int b = 0; b < block; ++b) dot += w.w[b] * phi[offset + b];
                        const double r = reward(s, a, next, w, field, goal);
                        CHECK(r == doctest::Approx(dot).epsilon(1e-12));
                    }
                }
            }
        }
    }
}

TEST_CASE("policy table clamps dynamic time lookups") {
    GridSpec grid{2, 2, {-1, -1}, {1, 1}, 3, 1.0};
    std::vector<Action> actions(4 * 3, Action::Up);
    actions[2 * 4 + 1] = Action::Right;  // t = 2, cell 1
    const Policy policy(grid, actions);
    CHECK(policy.action(State{1, 2}) == Action::Right);
    CHECK(policy.action(State{1, 50}) == Action::Right);
    CHECK(policy.action(State{1, 0}) == Action::Up);
}
