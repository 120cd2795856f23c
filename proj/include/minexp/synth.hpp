#pragma once

#include "minexp/oracle.hpp"

namespace minexp::synth {

using fieldgen::ThreatField;
using mdp::Goal;

// Deterministic rollout of a policy from one start: stops on reaching the
// goal cell or after max_transitions moves. Off-grid action choices become
// self-transitions. Cost is recorded under the pure-threat convention.
oracle::Path synthesize_path(const mdp::Policy& policy, const ThreatField& field,
                             const Goal& goal, const mdp::State& start, int max_transitions,
                             mdp::FeatureVariant feature_variant);

// One path per start, in start order. The dataset keeps non-convergent paths
// (flagged via reached_goal) rather than filtering them.
oracle::PathDataset synthesize_dataset(const mdp::Policy& policy, const ThreatField& field,
                                       const Goal& goal, const std::vector<mdp::State>& starts,
                                       int max_transitions, mdp::FeatureVariant feature_variant,
                                       int threads = 1);

// Guards cross-field synthesis: the policy's grid shape and time mode must
// match the field it is applied to.
void check_compatible(const mdp::Policy& policy, const ThreatField& field);

}  // namespace minexp::synth
