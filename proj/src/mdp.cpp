#include "minexp/mdp.hpp"

#include <cmath>
#include <string>

namespace minexp::mdp {

const char* action_name(Action a) {
    switch (a) {
        case Action::Up: return "up";
        case Action::Down: return "down";
        case Action::Left: return "left";
        case Action::Right: return "right";
    }
    return "?";
}

Goal Goal::at_cell(int cell, const GridSpec& grid) {
    if (!grid.valid_cell(cell)) throw input_error("goal cell out of range");
    return Goal{cell, grid.coord(cell)};
}

Goal Goal::max_corner(const GridSpec& grid) {
    return at_cell(grid.n_cells() - 1, grid);
}

std::optional<State> transition(const State& s, Action u, const GridSpec& grid) {
    int row = grid.row_of(s.cell);
    int col = grid.col_of(s.cell);
    switch (u) {
        case Action::Up: ++row; break;
        case Action::Down: --row; break;
        case Action::Left: --col; break;
        case Action::Right: ++col; break;
    }
    if (row < 0 || row >= grid.rows || col < 0 || col >= grid.cols) return std::nullopt;
    return State{grid.cell_of(row, col), grid.dynamic() ? s.t + 1 : 0};
}

std::vector<std::pair<Action, State>> neighbors(const State& s, const GridSpec& grid) {
    std::vector<std::pair<Action, State>> result;
    result.reserve(kNumActions);
    for (Action a : kActionOrder) {
        if (auto next = transition(s, a, grid)) result.emplace_back(a, *next);
    }
    return result;
}

State step_or_stay(const State& s, Action u, const GridSpec& grid) {
    if (auto next = transition(s, u, grid)) return *next;
    return State{s.cell, grid.dynamic() ? s.t + 1 : 0};
}

const char* feature_variant_name(FeatureVariant v) {
    return v == FeatureVariant::Standard ? "standard" : "split";
}

FeatureVariant feature_variant_from_name(const std::string& name) {
    if (name == "standard") return FeatureVariant::Standard;
    if (name == "split") return FeatureVariant::SplitDistance;
    throw input_error("unknown feature variant: " + name);
}

void RewardWeights::validate() const {
    if (static_cast<int>(w.size()) != feature_block_size(variant)) {
        throw input_error("reward weight length does not match feature variant");
    }
    for (double x : w) {
        if (!std::isfinite(x)) throw input_error("reward weights must be finite");
    }
}

namespace {

inline void append_block(std::vector<double>& out, int cell, int t, const ThreatField& field,
                         const Goal& goal, FeatureVariant variant) {
    const auto [x, y] = field.grid.coord(cell);
    out.push_back(field.at(cell, t));
    if (variant == FeatureVariant::Standard) {
        out.push_back(std::hypot(x - goal.coord[0], y - goal.coord[1]));
    } else {
        out.push_back(std::abs(x - goal.coord[0]));
        out.push_back(std::abs(y - goal.coord[1]));
    }
}

}  // namespace

std::vector<double> feature_vector(const State& s, const ThreatField& field, const Goal& goal,
                                   FeatureVariant variant) {
    std::vector<double> phi;
    phi.reserve(feature_length(variant));
    append_block(phi, s.cell, s.t, field, goal, variant);
    for (Action a : kActionOrder) {
        if (auto next = transition(s, a, field.grid)) {
            append_block(phi, next->cell, s.t + 1, field, goal, variant);
        } else {
            append_block(phi, s.cell, s.t, field, goal, variant);
        }
    }
    return phi;
}

std::vector<double> own_feature_block(const State& s, const ThreatField& field, const Goal& goal,
                                      FeatureVariant variant) {
    std::vector<double> block;
    block.reserve(feature_block_size(variant));
    append_block(block, s.cell, s.t, field, goal, variant);
    return block;
}

double reward(const State& s, Action u, const State& s_next, const RewardWeights& w,
              const ThreatField& field, const Goal& goal) {
    w.validate();
    const auto next = transition(s, u, field.grid);
    if (!next || !(*next == s_next)) {
        throw input_error("reward: (s, u, s') is not a valid transition");
    }
    const std::vector<double> block =
        own_feature_block(s_next, field, goal, w.variant);
    double r = 0.0;
    for (std::size_t i = 0; i < w.w.size(); ++i) r += w.w[i] * block[i];
    return r;
}

Policy::Policy(GridSpec grid, std::vector<Action> actions)
    : grid_(std::move(grid)), actions_(std::move(actions)) {
    const std::size_t expected = static_cast<std::size_t>(grid_.n_cells()) *
                                 (grid_.dynamic() ? grid_.n_time_steps : 1);
    if (actions_.size() != expected) {
        throw input_error("policy action table size does not match grid");
    }
}

}  // namespace minexp::mdp
