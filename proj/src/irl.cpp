#include "minexp/irl.hpp"

#include <algorithm>
#include <cmath>

namespace minexp::irl {

const char* weight_postprocess_name(WeightPostprocess p) {
    return p == WeightPostprocess::ClipRescale ? "clip-rescale" : "none";
}

WeightPostprocess weight_postprocess_from_name(const std::string& name) {
    if (name == "clip-rescale") return WeightPostprocess::ClipRescale;
    if (name == "none") return WeightPostprocess::None;
    throw input_error("unknown weight postprocess: " + name);
}

void IRLConfig::validate() const {
    if (!(convergence_threshold > 0.0)) throw input_error("convergence_threshold must be > 0");
    if (max_iterations < 1) throw input_error("max_iterations must be positive");
    if (episodes_per_iteration < 1) throw input_error("episodes_per_iteration must be positive");
    if (max_path_transitions < 1) throw input_error("max_path_transitions must be positive");
    if (!(lr_weights > 0.0 && lr_weights <= 1.0)) {
        throw input_error("lr_weights must be in (0, 1]");
    }
    if (rollouts_per_iteration < 0) throw input_error("rollouts_per_iteration must be >= 0");
    if (initial_weights.empty()) throw input_error("initial weights must be non-empty");
}

std::vector<double> projection_update(const std::vector<double>& mu_bar,
                                      const std::vector<double>& delta_mu) {
    if (mu_bar.size() != delta_mu.size()) {
        throw input_error("projection_update: vector length mismatch");
    }
    double norm_sq = 0.0;
    double inner = 0.0;
    for (std::size_t i = 0; i < mu_bar.size(); ++i) {
        norm_sq += delta_mu[i] * delta_mu[i];
        inner += delta_mu[i] * mu_bar[i];
    }
    if (norm_sq == 0.0) return mu_bar;
    const double scale = inner / std::sqrt(norm_sq);
    std::vector<double> out(mu_bar.size());
    for (std::size_t i = 0; i < mu_bar.size(); ++i) {
        out[i] = mu_bar[i] + scale * delta_mu[i];
    }
    return out;
}

std::vector<double> blend_weights(const std::vector<double>& w,
                                  const std::vector<double>& mu_bar_next, double eta) {
    if (w.size() != mu_bar_next.size()) throw input_error("blend_weights: length mismatch");
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        out[i] = eta * mu_bar_next[i] + (1.0 - eta) * w[i];
    }
    return out;
}

std::vector<double> postprocess_weights(std::vector<double> w, WeightPostprocess mode) {
    if (mode == WeightPostprocess::None) return w;
    for (double& x : w) x = std::min(x, 0.0);
    double max_abs = 0.0;
    for (double x : w) max_abs = std::max(max_abs, std::abs(x));
    if (max_abs > 0.0) {
        for (double& x : w) x /= max_abs;
    }
    return w;
}

std::vector<double> weight_update(const std::vector<double>& w,
                                  const std::vector<double>& mu_bar_next, double eta,
                                  WeightPostprocess mode) {
    return postprocess_weights(blend_weights(w, mu_bar_next, eta), mode);
}

std::pair<std::vector<double>, oracle::PathDataset> rollout_feature_expectation(
    const mdp::Policy& policy, const ThreatField& field, const Goal& goal,
    const std::vector<mdp::State>& starts, int max_transitions,
    mdp::FeatureVariant feature_variant) {
    oracle::PathDataset paths = synth::synthesize_dataset(policy, field, goal, starts,
                                                          max_transitions, feature_variant);
    return {oracle::feature_expectation(paths), std::move(paths)};
}

namespace {

// Scales mu_bar to unit infinity norm after each projection so its direction
// survives but its magnitude cannot run away across iterations.
void rescale_inf(std::vector<double>& v) {
    double max_abs = 0.0;
    for (double x : v) max_abs = std::max(max_abs, std::abs(x));
    if (max_abs > 0.0) {
        for (double& x : v) x /= max_abs;
    }
}

std::vector<double> pad_to_length(std::vector<double> v, std::size_t n) {
    while (v.size() < n) v.push_back(v.back());
    v.resize(n);
    return v;
}

double relative_error_norm(const std::vector<double>& mu, const std::vector<double>& mu_ref) {
    double sq = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double scale = mu_ref[i] != 0.0 ? mu_ref[i] : 1.0;
        const double d = mu[i] / scale - 1.0;
        sq += d * d;
    }
    return std::sqrt(sq);
}

}  // namespace

TrainingResult irl_train(const oracle::PathDataset& dataset, const ThreatField& field,
                         const Goal& goal, const IRLConfig& irl_cfg, const dql::DQLConfig& dql_cfg,
                         std::uint64_t seed,
                         const std::function<void(const IterationRecord&)>& on_iteration) {
    irl_cfg.validate();
    dql_cfg.validate();
    if (dataset.paths.empty()) throw input_error("irl_train needs a non-empty dataset");

    const mdp::FeatureVariant variant = dataset.feature_variant;
    const std::size_t dim = mdp::feature_block_size(variant);
    const std::vector<double> mu_z = oracle::feature_expectation(dataset);

    std::vector<mdp::State> starts = oracle::all_non_goal_starts(field.grid, goal);
    if (irl_cfg.rollouts_per_iteration > 0 &&
        irl_cfg.rollouts_per_iteration < static_cast<int>(starts.size())) {
        Rng subset_rng(derive_seed(seed, 2));
        subset_rng.shuffle(starts);
        starts.resize(irl_cfg.rollouts_per_iteration);
        std::sort(starts.begin(), starts.end(),
                  [](const mdp::State& a, const mdp::State& b) { return a.cell < b.cell; });
    }

    TrainingResult result;
    result.model = dql::QModel::initialize(field, goal, variant, dql_cfg, derive_seed(seed, 1));
    const dql::SweepWorkspace ws =
        dql::SweepWorkspace::build(field, goal, variant, result.model.norm);

    std::vector<double> w = pad_to_length(irl_cfg.initial_weights, dim);
    std::vector<double> mu_bar = w;
    double error = relative_error_norm(std::vector<double>(dim, 0.0), mu_z);

    for (int i = 0; i < irl_cfg.max_iterations && error >= irl_cfg.convergence_threshold; ++i) {
        const Eigen::MatrixXd rewards = ws.rewards(mdp::RewardWeights{w, variant});
        for (int e = 0; e < irl_cfg.episodes_per_iteration; ++e) {
            dql::run_dql_sweeps(result.model, ws, rewards, dql_cfg);
        }
        const mdp::Policy policy = dql::greedy_policy(result.model, ws);
        auto [mu, rollouts] = rollout_feature_expectation(policy, field, goal, starts,
                                                          irl_cfg.max_path_transitions, variant);
        error = relative_error_norm(mu, mu_z);

        // Relative feature units keep the projection commensurate with mu_Z.
        std::vector<double> mu_rel(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            mu_rel[k] = mu[k] / (mu_z[k] != 0.0 ? mu_z[k] : 1.0);
        }
        std::vector<double> delta(dim);
        for (std::size_t k = 0; k < dim; ++k) delta[k] = mu_rel[k] - mu_bar[k];
        mu_bar = projection_update(mu_bar, delta);
        rescale_inf(mu_bar);
        w = weight_update(w, mu_bar, irl_cfg.lr_weights, irl_cfg.weight_postprocess);

        IterationRecord record{i, error, rollouts.fraction_reached_goal(), w};
        result.history.push_back(record);
        if (on_iteration) on_iteration(record);
    }

    result.converged = error < irl_cfg.convergence_threshold;
    result.weights = mdp::RewardWeights{w, variant};
    result.policy = dql::greedy_policy(result.model, ws);
    return result;
}

}  // namespace minexp::irl
