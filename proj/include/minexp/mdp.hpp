#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "minexp/fieldgen.hpp"

namespace minexp::mdp {

using fieldgen::GridSpec;
using fieldgen::ThreatField;

// Fixed action order. Every scan over actions (feature blocks, network
// outputs, argmax tie-breaks) uses this order.
enum class Action : int { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr int kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kActionOrder{Action::Up, Action::Down,
                                                              Action::Left, Action::Right};

const char* action_name(Action a);

// MDP state: a grid cell plus a time step. In static mode t stays 0 and the
// state is the cell alone.
struct State {
    int cell = 0;
    int t = 0;
    bool operator==(const State&) const = default;
};

struct Goal {
    int cell = 0;
    std::array<double, 2> coord{};

    static Goal at_cell(int cell, const GridSpec& grid);
    // The max-extent corner of the workspace (top-right cell).
    static Goal max_corner(const GridSpec& grid);
};

// 4-way move. Returns the neighbor state (time advances by one step in
// dynamic mode) or nullopt when the move exits the grid.
std::optional<State> transition(const State& s, Action u, const GridSpec& grid);

// All valid (action, neighbor) pairs of s, in fixed action order.
std::vector<std::pair<Action, State>> neighbors(const State& s, const GridSpec& grid);

// Successor under u with off-grid moves treated as self-transitions; the
// time coordinate still advances in dynamic mode.
State step_or_stay(const State& s, Action u, const GridSpec& grid);

enum class FeatureVariant : int { Standard = 0, SplitDistance = 1 };

// Entries per feature block: (threat, distance) or (threat, |dx|, |dy|).
inline constexpr int feature_block_size(FeatureVariant v) {
    return v == FeatureVariant::Standard ? 2 : 3;
}
// One block for the state itself plus one per action.
inline constexpr int feature_length(FeatureVariant v) {
    return feature_block_size(v) * (kNumActions + 1);
}

const char* feature_variant_name(FeatureVariant v);
FeatureVariant feature_variant_from_name(const std::string& name);

// Linear reward coefficients; length must match the feature block size.
struct RewardWeights {
    std::vector<double> w;
    FeatureVariant variant = FeatureVariant::Standard;

    void validate() const;
};

// Per-state feature vector: the state's own (threat, distance) block followed
// by one block per action for the reached neighbor, in fixed action order.
// Neighbor blocks sample the field at t+1 (clamped); an off-grid action
// contributes a copy of the state's own block.
std::vector<double> feature_vector(const State& s, const ThreatField& field, const Goal& goal,
                                   FeatureVariant variant);

// The state's own feature block only (the first feature_block_size entries).
std::vector<double> own_feature_block(const State& s, const ThreatField& field, const Goal& goal,
                                      FeatureVariant variant);

// Linear reward of a valid transition: w1 * c(x', t') + w2 * |x' - goal|
// (split variant: w1 * c + w2 * |dx| + w3 * |dy|). Throws if (s, u, s') is
// not a valid transition.
double reward(const State& s, Action u, const State& s_next, const RewardWeights& w,
              const ThreatField& field, const Goal& goal);

// Deterministic policy as an action table over (cell, t). Time indices clamp
// at the final slice, mirroring the field.
class Policy {
public:
    Policy() = default;
    Policy(GridSpec grid, std::vector<Action> actions);

    Action action(const State& s) const {
        const int t = grid_.dynamic() ? std::min(s.t, grid_.n_time_steps - 1) : 0;
        return actions_[static_cast<std::size_t>(t) * grid_.n_cells() + s.cell];
    }

    const GridSpec& grid() const { return grid_; }
    const std::vector<Action>& actions() const { return actions_; }

private:
    GridSpec grid_;
    std::vector<Action> actions_;
};

}  // namespace minexp::mdp
