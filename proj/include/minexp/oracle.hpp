#pragma once

#include <functional>
#include <string>
#include <vector>

#include "minexp/mdp.hpp"

namespace minexp::oracle {

using fieldgen::GridSpec;
using fieldgen::ThreatField;
using mdp::Goal;

// Node-cost convention for optimal paths. PureThreat sums c(x, t) over the
// visited nodes; ThreatPlusVerticalDistance adds |y - goal.y| per node.
enum class CostVariant : int { PureThreat = 0, ThreatPlusVerticalDistance = 1 };

const char* cost_variant_name(CostVariant v);
CostVariant cost_variant_from_name(const std::string& name);

// Cost charged for occupying a cell at a time step.
using NodeCost = std::function<double(int cell, int t)>;

NodeCost node_cost_function(CostVariant variant, const ThreatField& field, const Goal& goal);

// One grid path: the state sequence (start node included), whether it ended
// at the goal, its cost under the dataset's node-cost convention, and the
// aggregate of per-state own feature blocks.
struct Path {
    std::vector<mdp::State> states;
    bool reached_goal = false;
    double cost = 0.0;
    std::vector<double> phi;
};

struct PathDataset {
    std::vector<Path> paths;
    CostVariant cost_variant = CostVariant::PureThreat;
    mdp::FeatureVariant feature_variant = mdp::FeatureVariant::Standard;
    std::string field_ref;

    std::size_t size() const { return paths.size(); }
    double fraction_reached_goal() const;
};

// Optimal cost-to-go per state plus the optimal action per state. Static
// tables have one slice; dynamic tables have one per time step, with lookups
// past the horizon clamped to the final slice (the field is frozen there).
struct ValueTable {
    GridSpec grid;
    Goal goal;
    CostVariant cost_variant = CostVariant::PureThreat;
    bool dynamic = false;
    std::vector<double> values;           // [t * n_cells + cell]
    std::vector<mdp::Action> successor;   // same indexing; meaningless at goal cells

    double value(int cell, int t = 0) const {
        const int nt = dynamic ? grid.n_time_steps : 1;
        const int tc = t >= nt ? nt - 1 : t;
        return values[static_cast<std::size_t>(tc) * grid.n_cells() + cell];
    }
    mdp::Action successor_action(int cell, int t = 0) const {
        const int nt = dynamic ? grid.n_time_steps : 1;
        const int tc = t >= nt ? nt - 1 : t;
        return successor[static_cast<std::size_t>(tc) * grid.n_cells() + cell];
    }
};

// Exact single-slice shortest paths by Dijkstra over node costs. Ties between
// equally good successors resolve to the earliest action in fixed order.
ValueTable dijkstra_static(const ThreatField& field, const Goal& goal, CostVariant variant);
ValueTable dijkstra_static(const ThreatField& field, const Goal& goal, const NodeCost& cost,
                           CostVariant tag = CostVariant::PureThreat);

// Exact time-expanded shortest paths for dynamic fields (pure threat cost).
// Nodes are (cell, t) pairs; the tail beyond the last slice is the frozen
// static problem on that slice. Goal cells are absorbing at every time step.
ValueTable dijkstra_dynamic(const ThreatField& field, const Goal& goal);

// The optimal deterministic policy encoded in a value table.
mdp::Policy oracle_policy(const ValueTable& table);

// The optimal path from one start, with cost and aggregate features filled in.
Path extract_path(const ValueTable& table, const ThreatField& field, const Goal& goal,
                  const mdp::State& start, mdp::FeatureVariant feature_variant);

// Builds cost/phi/reached_goal for an externally produced state sequence.
Path finalize_path(std::vector<mdp::State> states, const ThreatField& field, const Goal& goal,
                   const NodeCost& cost, mdp::FeatureVariant feature_variant);

// One exactly optimal path per start state.
PathDataset generate_expert_dataset(const ThreatField& field, const Goal& goal,
                                    const std::vector<mdp::State>& starts, CostVariant variant,
                                    mdp::FeatureVariant feature_variant);

// mu_Z: the mean over the dataset of per-path aggregate features.
std::vector<double> feature_expectation(const PathDataset& dataset);

// Every non-goal cell as a start state at t = 0, in cell order.
std::vector<mdp::State> all_non_goal_starts(const GridSpec& grid, const Goal& goal);

}  // namespace minexp::oracle
