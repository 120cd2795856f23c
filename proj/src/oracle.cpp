#include "minexp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace minexp::oracle {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* cost_variant_name(CostVariant v) {
    return v == CostVariant::PureThreat ? "pure" : "vertical";
}

CostVariant cost_variant_from_name(const std::string& name) {
    if (name == "pure") return CostVariant::PureThreat;
    if (name == "vertical") return CostVariant::ThreatPlusVerticalDistance;
    throw input_error("unknown cost variant: " + name);
}

NodeCost node_cost_function(CostVariant variant, const ThreatField& field, const Goal& goal) {
    if (variant == CostVariant::PureThreat) {
        return [&field](int cell, int t) { return field.at(cell, t); };
    }
    return [&field, goal](int cell, int t) {
        return field.at(cell, t) + std::abs(field.grid.coord(cell)[1] - goal.coord[1]);
    };
}

double PathDataset::fraction_reached_goal() const {
    if (paths.empty()) return 0.0;
    std::size_t n = 0;
    for (const Path& p : paths) n += p.reached_goal ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(paths.size());
}

namespace {

// Per-slice Dijkstra over node costs: dist(s) = node_cost(s) + min over
// neighbors of dist. Successors are re-derived afterwards by a fixed-order
// scan so tie-breaking is independent of heap pop order.
void solve_static_slice(const GridSpec& grid, const Goal& goal,
                        const std::function<double(int)>& node_cost, double* dist,
                        mdp::Action* succ) {
    const int n = grid.n_cells();
    std::fill(dist, dist + n, kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[goal.cell] = node_cost(goal.cell);
    heap.emplace(dist[goal.cell], goal.cell);
    while (!heap.empty()) {
        const auto [d, cell] = heap.top();
        heap.pop();
        if (d > dist[cell]) continue;
        for (const auto& [a, nb] : mdp::neighbors(mdp::State{cell, 0}, grid)) {
            const double cand = node_cost(nb.cell) + d;
            if (cand < dist[nb.cell]) {
                dist[nb.cell] = cand;
                heap.emplace(cand, nb.cell);
            }
        }
    }
    for (int cell = 0; cell < n; ++cell) {
        succ[cell] = mdp::Action::Up;
        if (cell == goal.cell) continue;
        double best = kInf;
        for (mdp::Action a : mdp::kActionOrder) {
            if (auto nb = mdp::transition(mdp::State{cell, 0}, a, grid)) {
                if (dist[nb->cell] < best) {
                    best = dist[nb->cell];
                    succ[cell] = a;
                }
            }
        }
    }
}

}  // namespace

ValueTable dijkstra_static(const ThreatField& field, const Goal& goal, CostVariant variant) {
    return dijkstra_static(field, goal, node_cost_function(variant, field, goal), variant);
}

ValueTable dijkstra_static(const ThreatField& field, const Goal& goal, const NodeCost& cost,
                           CostVariant tag) {
    field.validate();
    if (field.grid.dynamic()) {
        throw input_error("dijkstra_static requires a static field");
    }
    const int n = field.grid.n_cells();
    ValueTable table{field.grid, goal, tag, false, std::vector<double>(n),
                     std::vector<mdp::Action>(n)};
    solve_static_slice(field.grid, goal, [&cost](int cell) { return cost(cell, 0); },
                       table.values.data(), table.successor.data());
    return table;
}

ValueTable dijkstra_dynamic(const ThreatField& field, const Goal& goal) {
    field.validate();
    if (!field.grid.dynamic()) {
        throw input_error("dijkstra_dynamic requires a dynamic field");
    }
    const GridSpec& grid = field.grid;
    const int n = grid.n_cells();
    const int nt = grid.n_time_steps;
    ValueTable table{grid, goal, CostVariant::PureThreat, true,
                     std::vector<double>(static_cast<std::size_t>(n) * nt),
                     std::vector<mdp::Action>(static_cast<std::size_t>(n) * nt)};

    // Beyond the final slice the field is frozen, so the tail problem is the
    // static one on that slice.
    const int last = nt - 1;
    double* last_vals = table.values.data() + static_cast<std::size_t>(last) * n;
    mdp::Action* last_succ = table.successor.data() + static_cast<std::size_t>(last) * n;
    solve_static_slice(grid, goal, [&field, last](int cell) { return field.at(cell, last); },
                       last_vals, last_succ);

    // Backward induction over the remaining slices; moves go from (cell, t)
    // to a neighbor at t + 1, and goal cells terminate at any time.
    for (int t = nt - 2; t >= 0; --t) {
        double* vals = table.values.data() + static_cast<std::size_t>(t) * n;
        mdp::Action* succ = table.successor.data() + static_cast<std::size_t>(t) * n;
        const double* next_vals = table.values.data() + static_cast<std::size_t>(t + 1) * n;
        for (int cell = 0; cell < n; ++cell) {
            if (cell == goal.cell) {
                vals[cell] = field.at(cell, t);
                succ[cell] = mdp::Action::Up;
                continue;
            }
            double best = kInf;
            mdp::Action best_a = mdp::Action::Up;
            for (mdp::Action a : mdp::kActionOrder) {
                if (auto nb = mdp::transition(mdp::State{cell, t}, a, grid)) {
                    if (next_vals[nb->cell] < best) {
                        best = next_vals[nb->cell];
                        best_a = a;
                    }
                }
            }
            vals[cell] = field.at(cell, t) + best;
            succ[cell] = best_a;
        }
    }
    return table;
}

mdp::Policy oracle_policy(const ValueTable& table) {
    return mdp::Policy(table.grid, table.successor);
}

Path finalize_path(std::vector<mdp::State> states, const ThreatField& field, const Goal& goal,
                   const NodeCost& cost, mdp::FeatureVariant feature_variant) {
    Path path;
    path.states = std::move(states);
    path.phi.assign(mdp::feature_block_size(feature_variant), 0.0);
    for (const mdp::State& s : path.states) {
        path.cost += cost(s.cell, s.t);
        const auto block = mdp::own_feature_block(s, field, goal, feature_variant);
        for (std::size_t i = 0; i < path.phi.size(); ++i) path.phi[i] += block[i];
    }
    path.reached_goal = !path.states.empty() && path.states.back().cell == goal.cell;
    return path;
}

Path extract_path(const ValueTable& table, const ThreatField& field, const Goal& goal,
                  const mdp::State& start, mdp::FeatureVariant feature_variant) {
    std::vector<mdp::State> states{start};
    mdp::State s = start;
    while (s.cell != goal.cell) {
        const mdp::Action a = table.successor_action(s.cell, s.t);
        const auto next = mdp::transition(s, a, table.grid);
        if (!next) throw input_error("value table successor walked off the grid");
        s = *next;
        states.push_back(s);
    }
    return finalize_path(std::move(states), field, goal,
                         node_cost_function(table.cost_variant, field, goal), feature_variant);
}

PathDataset generate_expert_dataset(const ThreatField& field, const Goal& goal,
                                    const std::vector<mdp::State>& starts, CostVariant variant,
                                    mdp::FeatureVariant feature_variant) {
    if (starts.empty()) throw input_error("expert dataset needs at least one start state");
    if (field.grid.dynamic() && variant != CostVariant::PureThreat) {
        throw input_error("dynamic expert datasets support only the pure threat cost");
    }
    const ValueTable table = field.grid.dynamic() ? dijkstra_dynamic(field, goal)
                                                  : dijkstra_static(field, goal, variant);
    PathDataset dataset;
    dataset.cost_variant = variant;
    dataset.feature_variant = feature_variant;
    dataset.paths.reserve(starts.size());
    for (const mdp::State& start : starts) {
        dataset.paths.push_back(extract_path(table, field, goal, start, feature_variant));
    }
    return dataset;
}

std::vector<double> feature_expectation(const PathDataset& dataset) {
    if (dataset.paths.empty()) throw input_error("feature expectation of an empty dataset");
    std::vector<double> mu(dataset.paths.front().phi.size(), 0.0);
    for (const Path& p : dataset.paths) {
        if (p.phi.size() != mu.size()) {
            throw input_error("dataset paths disagree on feature length");
        }
        for (std::size_t i = 0; i < mu.size(); ++i) mu[i] += p.phi[i];
    }
    for (double& x : mu) x /= static_cast<double>(dataset.paths.size());
    return mu;
}

std::vector<mdp::State> all_non_goal_starts(const GridSpec& grid, const Goal& goal) {
    std::vector<mdp::State> starts;
    starts.reserve(grid.n_cells() - 1);
    for (int cell = 0; cell < grid.n_cells(); ++cell) {
        if (cell != goal.cell) starts.push_back(mdp::State{cell, 0});
    }
    return starts;
}

}  // namespace minexp::oracle
