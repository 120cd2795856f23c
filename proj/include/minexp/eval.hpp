#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "minexp/synth.hpp"

namespace minexp::eval {

using fieldgen::GridSpec;
using fieldgen::ThreatField;
using mdp::Goal;

// Per-start percent error of rollout costs against the oracle. Entries are
// NaN at the goal cell and at starts whose rollout failed to reach the goal;
// such starts are excluded from mean/max/stddev but count against
// converged_fraction.
struct ErrorMap {
    GridSpec grid;
    int goal_cell = 0;
    std::vector<double> percent_error;  // per cell
    double mean = 0.0;
    double max = 0.0;
    double stddev = 0.0;
    double converged_fraction = 0.0;
};

// Per-state mean and standard deviation across runs (population convention),
// after dropping runs that did not converge from every start.
struct AggregateMaps {
    GridSpec grid;
    int goal_cell = 0;
    std::vector<double> mean;
    std::vector<double> stddev;
    int runs_used = 0;
};

struct PCAResult {
    std::vector<Eigen::VectorXd> components;         // up to 3, orthonormal
    std::vector<std::array<double, 3>> projections;  // per path; unused axes are 0
    std::vector<int> labels;                         // 0 = dataset a, 1 = dataset b
    std::vector<double> explained_variance;          // non-increasing
    bool degenerate = false;                         // fewer than 3 usable components
};

// Sum of node costs over all states of the path (start included), with
// clamped time slices in dynamic mode.
double value_of_path(const oracle::Path& path, const ThreatField& field,
                     oracle::CostVariant variant);
double value_of_path(const oracle::Path& path, const ThreatField& field,
                     const oracle::NodeCost& cost);

// Rolls the policy out from every non-goal cell and compares rollout cost to
// the oracle value, using the oracle's cost convention.
ErrorMap error_map(const mdp::Policy& policy, const ThreatField& field, const Goal& goal,
                   const oracle::ValueTable& oracle_table, int max_transitions, int threads = 1);
ErrorMap error_map(const mdp::Policy& policy, const ThreatField& field, const Goal& goal,
                   const oracle::ValueTable& oracle_table, const oracle::NodeCost& cost,
                   int max_transitions, int threads = 1);

AggregateMaps aggregate_runs(const std::vector<ErrorMap>& maps);

// Binary cell-occupancy encoding of a path.
std::vector<double> path_encoding(const oracle::Path& path, const GridSpec& grid);

// Pools both datasets' occupancy encodings, centers them, and extracts the
// top three principal directions by power iteration with deflation. Both
// datasets must live on the given grid.
PCAResult pca_discriminate(const oracle::PathDataset& a, const oracle::PathDataset& b,
                           const GridSpec& grid);

}  // namespace minexp::eval
