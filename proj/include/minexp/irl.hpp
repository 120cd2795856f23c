#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "minexp/dql.hpp"
#include "minexp/synth.hpp"

namespace minexp::irl {

using fieldgen::ThreatField;
using mdp::Goal;

enum class WeightPostprocess : int { ClipRescale = 0, None = 1 };

const char* weight_postprocess_name(WeightPostprocess p);
WeightPostprocess weight_postprocess_from_name(const std::string& name);

struct IRLConfig {
    double convergence_threshold = 0.01;  // e_mu, on mu_Z-relative features
    int max_iterations = 50;              // M_I
    int episodes_per_iteration = 300;     // M_E
    int max_path_transitions = 500;       // M_P
    double lr_weights = 0.01;             // eta_I
    // 0 selects all non-goal states; otherwise a seeded random subset.
    int rollouts_per_iteration = 0;       // K
    std::vector<double> initial_weights{-1.0, -1.0};  // w0, padded to the variant length
    WeightPostprocess weight_postprocess = WeightPostprocess::ClipRescale;

    void validate() const;
};

struct IterationRecord {
    int iteration = 0;
    double error_norm = 0.0;          // || mu ./ mu_Z - 1 ||
    double fraction_converged = 0.0;  // rollouts that reached the goal
    std::vector<double> weights;      // w after this iteration's update
};

struct TrainingResult {
    mdp::RewardWeights weights;
    mdp::Policy policy;
    dql::QModel model;
    std::vector<IterationRecord> history;
    bool converged = false;
};

// mu_bar + (<delta, mu_bar> / |delta|) * delta; returns mu_bar unchanged when
// delta is zero.
std::vector<double> projection_update(const std::vector<double>& mu_bar,
                                      const std::vector<double>& delta_mu);

// The convex blend eta * mu_bar_next + (1 - eta) * w, before post-processing.
std::vector<double> blend_weights(const std::vector<double>& w,
                                  const std::vector<double>& mu_bar_next, double eta);

// ClipRescale clamps positive components to zero and rescales to unit
// infinity norm (reward scale does not change the greedy argmax).
std::vector<double> postprocess_weights(std::vector<double> w, WeightPostprocess mode);

// Blend followed by post-processing.
std::vector<double> weight_update(const std::vector<double>& w,
                                  const std::vector<double>& mu_bar_next, double eta,
                                  WeightPostprocess mode);

// Rolls the policy out from every start (up to max_transitions moves each),
// and returns the mean aggregate feature vector plus the rollout paths.
// Truncated paths keep their accumulated features, which penalizes
// non-convergent policies.
std::pair<std::vector<double>, oracle::PathDataset> rollout_feature_expectation(
    const mdp::Policy& policy, const ThreatField& field, const Goal& goal,
    const std::vector<mdp::State>& starts, int max_transitions,
    mdp::FeatureVariant feature_variant);

// The full training loop: repeated Q-learning under the current reward
// weights, policy rollouts, feature-expectation projection, and weight
// blending, until the rollout features match the dataset's within
// convergence_threshold (relative) or max_iterations is hit.
TrainingResult irl_train(const oracle::PathDataset& dataset, const ThreatField& field,
                         const Goal& goal, const IRLConfig& irl_cfg, const dql::DQLConfig& dql_cfg,
                         std::uint64_t seed,
                         const std::function<void(const IterationRecord&)>& on_iteration = {});

}  // namespace minexp::irl
