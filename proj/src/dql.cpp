#include "minexp/dql.hpp"

#include <cmath>

#include "minexp/errors.hpp"

namespace minexp::dql {

const char* epsilon_mode_name(EpsilonMode m) {
    return m == EpsilonMode::PerState ? "per-state" : "per-sweep";
}

EpsilonMode epsilon_mode_from_name(const std::string& name) {
    if (name == "per-state") return EpsilonMode::PerState;
    if (name == "per-sweep") return EpsilonMode::PerSweep;
    throw input_error("unknown epsilon mode: " + name);
}

void DQLConfig::validate() const {
    if (sweeps_per_call < 1) throw input_error("sweeps_per_call must be positive");
    if (!(lr_q > 0.0 && lr_q < 1.0)) throw input_error("lr_q must be in (0, 1)");
    if (!(lr_target > 0.0 && lr_target < 1.0)) throw input_error("lr_target must be in (0, 1)");
    if (!(eps_floor >= 0.0 && eps_floor <= eps_start && eps_start <= 1.0)) {
        throw input_error("epsilon schedule needs 0 <= eps_floor <= eps_start <= 1");
    }
    if (!(eps_decay > 0.0)) throw input_error("eps_decay must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw input_error("gamma must be in (0, 1]");
    if (!(loss_reset_threshold >= 0.0)) throw input_error("loss_reset_threshold must be >= 0");
    for (int h : hidden_layers) {
        if (h < 1) throw input_error("hidden layer sizes must be positive");
    }
}

Normalization Normalization::for_field(const ThreatField& field) {
    return Normalization{field.max_value(), field.grid.diagonal()};
}

QModel QModel::initialize(const ThreatField& field, const Goal& goal,
                          mdp::FeatureVariant variant, const DQLConfig& cfg,
                          std::uint64_t seed) {
    cfg.validate();
    field.validate();
    std::vector<int> sizes;
    sizes.push_back(mdp::feature_length(variant));
    for (int h : cfg.hidden_layers) sizes.push_back(h);
    sizes.push_back(mdp::kNumActions);

    QModel model;
    model.rng = Rng(seed);
    model.theta = Mlp::xavier(sizes, model.rng);
    model.theta_prime = model.theta;
    model.norm = Normalization::for_field(field);
    model.variant = variant;
    model.dynamic_mode = field.grid.dynamic();
    model.grid = field.grid;
    model.goal_cell = goal.cell;
    model.global_iteration = 0;
    return model;
}

double epsilon(std::uint64_t j, const DQLConfig& cfg) {
    return cfg.eps_floor +
           (cfg.eps_start - cfg.eps_floor) * std::exp(-static_cast<double>(j) / cfg.eps_decay);
}

SweepWorkspace SweepWorkspace::build(const ThreatField& field, const Goal& goal,
                                     mdp::FeatureVariant variant, const Normalization& norm) {
    field.validate();
    const GridSpec& grid = field.grid;
    const int n_cells = grid.n_cells();
    const int n_t = grid.dynamic() ? grid.n_time_steps : 1;
    const int n_states = n_cells * n_t;
    const int block = mdp::feature_block_size(variant);
    const int phi_len = mdp::feature_length(variant);

    SweepWorkspace ws;
    ws.grid = grid;
    ws.goal_cell = goal.cell;
    ws.variant = variant;
    ws.n_states = n_states;
    ws.features.resize(phi_len, n_states);
    ws.successors.resize(4, n_states);
    ws.terminal.resize(4, n_states);

    for (int t = 0; t < n_t; ++t) {
        for (int cell = 0; cell < n_cells; ++cell) {
            const int idx = t * n_cells + cell;
            const mdp::State s{cell, t};
            const std::vector<double> phi = mdp::feature_vector(s, field, goal, variant);
            for (int i = 0; i < phi_len; ++i) {
                const bool is_threat = (i % block) == 0;
                ws.features(i, idx) =
                    phi[i] / (is_threat ? norm.threat_scale : norm.distance_scale);
            }
            for (int a = 0; a < mdp::kNumActions; ++a) {
                const mdp::State next = mdp::step_or_stay(s, mdp::kActionOrder[a], grid);
                const int next_t = grid.dynamic() ? std::min(next.t, n_t - 1) : 0;
                ws.successors(a, idx) = next_t * n_cells + next.cell;
                ws.terminal(a, idx) = next.cell == goal.cell;
            }
        }
    }
    return ws;
}

Eigen::MatrixXd SweepWorkspace::rewards(const mdp::RewardWeights& w) const {
    w.validate();
    if (w.variant != variant) {
        throw input_error("reward weight variant does not match workspace");
    }
    const int block = mdp::feature_block_size(variant);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(4, n_states);
    for (int a = 0; a < mdp::kNumActions; ++a) {
        for (int b = 0; b < block; ++b) {
            r.row(a) += w.w[b] * features.row(block * (a + 1) + b);
        }
    }
    return r;
}

double dql_sweep(QModel& model, const SweepWorkspace& ws, const Eigen::MatrixXd& rewards,
                 const DQLConfig& cfg) {
    const int n = ws.n_states;
    Mlp::ForwardCache cache;
    const Eigen::MatrixXd q = model.theta.forward(ws.features, &cache);
    const Eigen::MatrixXd q_target = model.theta_prime.forward(ws.features);
    const Eigen::VectorXd v_target = q_target.colwise().maxCoeff();

    const double eps = epsilon(model.global_iteration, cfg);
    const bool sweep_explore =
        cfg.epsilon_mode == EpsilonMode::PerSweep && model.rng.uniform() < eps;

    Eigen::VectorXd residuals(n);
    Eigen::VectorXi chosen(n);
    for (int s = 0; s < n; ++s) {
        bool explore = sweep_explore;
        if (cfg.epsilon_mode == EpsilonMode::PerState) {
            explore = model.rng.uniform() < eps;
        }
        int a;
        if (explore) {
            a = static_cast<int>(model.rng.uniform_index(mdp::kNumActions));
        } else {
            a = 0;
            for (int k = 1; k < mdp::kNumActions; ++k) {
                if (q(k, s) > q(a, s)) a = k;
            }
        }
        chosen(s) = a;
        const double bootstrap =
            ws.terminal(a, s) ? 0.0 : cfg.gamma * v_target(ws.successors(a, s));
        residuals(s) = rewards(a, s) - q(a, s) + bootstrap;
    }

    const double loss = residuals.norm();
    if (!std::isfinite(loss)) {
        throw divergence_error("dql sweep produced a non-finite loss");
    }

    // d(mean squared residual)/dQ(s, a_s) = -2 residual / n
    Eigen::MatrixXd output_grad = Eigen::MatrixXd::Zero(mdp::kNumActions, n);
    const double scale = -2.0 / static_cast<double>(n);
    for (int s = 0; s < n; ++s) {
        output_grad(chosen(s), s) = scale * residuals(s);
    }
    model.theta.apply_gradient(cache, output_grad, cfg.lr_q);
    model.theta_prime.blend_from(model.theta, cfg.lr_target);
    model.global_iteration += 1;
    return loss;
}

double run_dql_sweeps(QModel& model, const SweepWorkspace& ws, const Eigen::MatrixXd& rewards,
                      const DQLConfig& cfg) {
    cfg.validate();
    double loss = 0.0;
    for (int k = 0; k < cfg.sweeps_per_call; ++k) {
        loss = dql_sweep(model, ws, rewards, cfg);
    }
    if (loss <= cfg.loss_reset_threshold) {
        model.theta_prime = model.theta;  // hard reset
    }
    return loss;
}

mdp::Policy run_dql(QModel& model, const ThreatField& field, const Goal& goal,
                    const mdp::RewardWeights& w, const DQLConfig& cfg) {
    const SweepWorkspace ws = SweepWorkspace::build(field, goal, model.variant, model.norm);
    run_dql_sweeps(model, ws, ws.rewards(w), cfg);
    return greedy_policy(model, ws);
}

mdp::Policy greedy_policy(const QModel& model, const SweepWorkspace& ws) {
    const Eigen::MatrixXd q = model.theta.forward(ws.features);
    std::vector<mdp::Action> actions(ws.n_states);
    for (int s = 0; s < ws.n_states; ++s) {
        int best = 0;
        for (int k = 1; k < mdp::kNumActions; ++k) {
            if (q(k, s) > q(best, s)) best = k;
        }
        actions[s] = mdp::kActionOrder[best];
    }
    return mdp::Policy(ws.grid, std::move(actions));
}

mdp::Policy greedy_policy(const QModel& model, const ThreatField& field, const Goal& goal) {
    return greedy_policy(model, SweepWorkspace::build(field, goal, model.variant, model.norm));
}

}  // namespace minexp::dql
