#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "minexp/mdp.hpp"
#include "minexp/mlp.hpp"
#include "minexp/rng.hpp"

namespace minexp::dql {

using fieldgen::GridSpec;
using fieldgen::ThreatField;
using mdp::Goal;

enum class EpsilonMode : int { PerState = 0, PerSweep = 1 };

const char* epsilon_mode_name(EpsilonMode m);
EpsilonMode epsilon_mode_from_name(const std::string& name);

struct DQLConfig {
    int sweeps_per_call = 25;           // M_Q
    double lr_q = 0.005;                // eta_Q
    double lr_target = 0.001;           // eta_Q'
    double eps_floor = 0.051;           // eps_0
    double eps_start = 0.95;            // eps_1
    double eps_decay = 500.0;           // d
    double gamma = 1.0;
    double loss_reset_threshold = 0.5;  // ell_bar, on the root-sum-square sweep loss
    EpsilonMode epsilon_mode = EpsilonMode::PerState;
    std::vector<int> hidden_layers{64, 64};

    void validate() const;
};

// Feature scaling applied to network inputs and training rewards: threat
// entries divide by the training field's maximum, distance entries by the
// workspace diagonal. The constants are frozen at training time and travel
// with the model so it can run on other fields.
struct Normalization {
    double threat_scale = 1.0;
    double distance_scale = 1.0;

    static Normalization for_field(const ThreatField& field);
};

// Q network, its mirror target network, and the training bookkeeping that
// persists across calls (exploration counter j and RNG state).
struct QModel {
    Mlp theta;
    Mlp theta_prime;
    Normalization norm;
    mdp::FeatureVariant variant = mdp::FeatureVariant::Standard;
    bool dynamic_mode = false;
    GridSpec grid;
    int goal_cell = 0;
    std::uint64_t global_iteration = 0;  // j; persists across run_dql calls
    Rng rng{0};

    static QModel initialize(const ThreatField& field, const Goal& goal,
                             mdp::FeatureVariant variant, const DQLConfig& cfg,
                             std::uint64_t seed);
};

// Exploration schedule: eps_0 + (eps_1 - eps_0) * exp(-j / d).
double epsilon(std::uint64_t j, const DQLConfig& cfg);

// Everything a sweep touches, precomputed per field: normalized feature
// columns per state, successor state indices per action (off-grid moves
// resolve to self-transitions), and terminal flags (successor is the goal).
// State index = t * n_cells + cell; static fields have t = 0 only.
struct SweepWorkspace {
    GridSpec grid;
    int goal_cell = 0;
    mdp::FeatureVariant variant = mdp::FeatureVariant::Standard;
    int n_states = 0;
    Eigen::MatrixXd features;                     // (|phi| x |S|)
    Eigen::Matrix<int, 4, Eigen::Dynamic> successors;
    Eigen::Matrix<bool, 4, Eigen::Dynamic> terminal;

    static SweepWorkspace build(const ThreatField& field, const Goal& goal,
                                mdp::FeatureVariant variant, const Normalization& norm);

    // Training reward per (action, state): w dotted with the action's
    // normalized feature block. Off-grid actions see the state's own block,
    // so they reward like staying put.
    Eigen::MatrixXd rewards(const mdp::RewardWeights& w) const;

    mdp::State state_of(int index) const {
        return mdp::State{index % grid.n_cells(), index / grid.n_cells()};
    }
};

// One full-batch sweep over all states: epsilon-greedy action choice, TD
// residuals against the target network (no bootstrap into the goal), one SGD
// step on the mean squared residual, then a soft target update. Returns the
// root-sum-square residual norm. Throws divergence_error on non-finite loss.
double dql_sweep(QModel& model, const SweepWorkspace& ws, const Eigen::MatrixXd& rewards,
                 const DQLConfig& cfg);

// sweeps_per_call sweeps followed by a hard target reset if the final sweep
// loss is at or below the reset threshold. Returns the final sweep loss.
double run_dql_sweeps(QModel& model, const SweepWorkspace& ws, const Eigen::MatrixXd& rewards,
                      const DQLConfig& cfg);

// Convenience form matching the training loop's contract: runs one call of
// sweeps and returns the greedy policy.
mdp::Policy run_dql(QModel& model, const ThreatField& field, const Goal& goal,
                    const mdp::RewardWeights& w, const DQLConfig& cfg);

// Deterministic greedy policy; argmax ties resolve to the earliest action.
mdp::Policy greedy_policy(const QModel& model, const SweepWorkspace& ws);
mdp::Policy greedy_policy(const QModel& model, const ThreatField& field, const Goal& goal);

}  // namespace minexp::dql
