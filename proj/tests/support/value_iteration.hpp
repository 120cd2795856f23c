#pragma once

// Exact tabular Q-value iteration on small static fields, using the same
// normalized-feature reward as the network but none of its machinery. Lets
// tests reason about the Bellman fixed point without a trained model.

#include <array>
#include <cmath>
#include <vector>

#include "minexp/dql.hpp"

namespace minexp::test_support {

inline std::vector<mdp::Action> value_iteration_policy(const fieldgen::ThreatField& field,
                                                       const mdp::Goal& goal,
                                                       const mdp::RewardWeights& w,
                                                       const dql::Normalization& norm,
                                                       int max_iterations = 100000) {
    const auto& grid = field.grid;
    const int n = grid.n_cells();
    const int block = mdp::feature_block_size(w.variant);

    // Normalized reward and successor per (state, action), with off-grid
    // moves as self-transitions.
    std::vector<std::array<double, 4>> reward(n);
    std::vector<std::array<int, 4>> next(n);
    std::vector<std::array<bool, 4>> terminal(n);
    for (int cell = 0; cell < n; ++cell) {
        const auto phi = mdp::feature_vector(mdp::State{cell, 0}, field, goal, w.variant);
        for (int a = 0; a < mdp::kNumActions; ++a) {
            double r = 0.0;
            for (int b = 0; b < block; ++b) {
                const double scale = b == 0 ? norm.threat_scale : norm.distance_scale;
                r += w.w[b] * phi[block * (a + 1) + b] / scale;
            }
            reward[cell][a] = r;
            const mdp::State s2 = mdp::step_or_stay(mdp::State{cell, 0},
                                                    mdp::kActionOrder[a], grid);
            next[cell][a] = s2.cell;
            terminal[cell][a] = s2.cell == goal.cell;
        }
    }

    std::vector<std::array<double, 4>> q(n, {0.0, 0.0, 0.0, 0.0});
    for (int iter = 0; iter < max_iterations; ++iter) {
        double delta = 0.0;
        auto q_new = q;
        for (int cell = 0; cell < n; ++cell) {
            for (int a = 0; a < mdp::kNumActions; ++a) {
                double bootstrap = 0.0;
                if (!terminal[cell][a]) {
                    const auto& row = q[next[cell][a]];
                    bootstrap = *std::max_element(row.begin(), row.end());
                }
                q_new[cell][a] = reward[cell][a] + bootstrap;
                delta = std::max(delta, std::abs(q_new[cell][a] - q[cell][a]));
            }
        }
        q = std::move(q_new);
        if (delta < 1e-13) break;
    }

    std::vector<mdp::Action> policy(n);
    for (int cell = 0; cell < n; ++cell) {
        int best = 0;
        for (int a = 1; a < mdp::kNumActions; ++a) {
            if (q[cell][a] > q[cell][best]) best = a;
        }
        policy[cell] = mdp::kActionOrder[best];
    }
    return policy;
}

}  // namespace minexp::test_support
