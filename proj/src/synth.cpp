#include "minexp/synth.hpp"

#include <thread>

namespace minexp::synth {

void check_compatible(const mdp::Policy& policy, const ThreatField& field) {
    const auto& pg = policy.grid();
    const auto& fg = field.grid;
    if (pg.rows != fg.rows || pg.cols != fg.cols) {
        throw input_error("policy grid shape does not match field grid");
    }
    if (pg.dynamic() != fg.dynamic()) {
        throw input_error("static and dynamic policies/fields cannot be mixed");
    }
}

oracle::Path synthesize_path(const mdp::Policy& policy, const ThreatField& field,
                             const Goal& goal, const mdp::State& start, int max_transitions,
                             mdp::FeatureVariant feature_variant) {
    check_compatible(policy, field);
    if (!field.grid.valid_cell(start.cell)) throw input_error("rollout start cell out of range");

    std::vector<mdp::State> states{start};
    mdp::State s = start;
    for (int k = 0; k < max_transitions && s.cell != goal.cell; ++k) {
        s = mdp::step_or_stay(s, policy.action(s), field.grid);
        states.push_back(s);
    }
    return oracle::finalize_path(std::move(states), field, goal,
                                 oracle::node_cost_function(oracle::CostVariant::PureThreat,
                                                            field, goal),
                                 feature_variant);
}

oracle::PathDataset synthesize_dataset(const mdp::Policy& policy, const ThreatField& field,
                                       const Goal& goal, const std::vector<mdp::State>& starts,
                                       int max_transitions, mdp::FeatureVariant feature_variant,
                                       int threads) {
    if (starts.empty()) throw input_error("synthesize_dataset needs at least one start");
    check_compatible(policy, field);

    oracle::PathDataset dataset;
    dataset.cost_variant = oracle::CostVariant::PureThreat;
    dataset.feature_variant = feature_variant;
    dataset.paths.resize(starts.size());

    // Results land in start-indexed slots, so the output is identical for any
    // thread count.
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            dataset.paths[i] = synthesize_path(policy, field, goal, starts[i], max_transitions,
                                               feature_variant);
        }
    };
    if (threads <= 1 || starts.size() < 2) {
        worker(0, starts.size());
    } else {
        const std::size_t n_workers = std::min<std::size_t>(threads, starts.size());
        std::vector<std::thread> pool;
        const std::size_t chunk = (starts.size() + n_workers - 1) / n_workers;
        for (std::size_t w = 0; w < n_workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(starts.size(), begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& t : pool) t.join();
    }
    return dataset;
}

}  // namespace minexp::synth
