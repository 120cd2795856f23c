#include "minexp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "minexp/rng.hpp"

namespace minexp::eval {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double value_of_path(const oracle::Path& path, const ThreatField& field,
                     oracle::CostVariant variant) {
    Goal goal{};  // vertical-distance costs need the goal; recover it from the last state
    if (variant == oracle::CostVariant::ThreatPlusVerticalDistance) {
        if (path.states.empty() || !path.reached_goal) {
            throw input_error("vertical-distance path value needs a goal-terminated path");
        }
        goal = Goal::at_cell(path.states.back().cell, field.grid);
    }
    return value_of_path(path, field, oracle::node_cost_function(variant, field, goal));
}

double value_of_path(const oracle::Path& path, const ThreatField& field,
                     const oracle::NodeCost& cost) {
    double total = 0.0;
    for (const mdp::State& s : path.states) {
        if (!field.grid.valid_cell(s.cell)) throw input_error("path state out of range");
        total += cost(s.cell, s.t);
    }
    return total;
}

ErrorMap error_map(const mdp::Policy& policy, const ThreatField& field, const Goal& goal,
                   const oracle::ValueTable& oracle_table, int max_transitions, int threads) {
    return error_map(policy, field, goal, oracle_table,
                     oracle::node_cost_function(oracle_table.cost_variant, field, goal),
                     max_transitions, threads);
}

ErrorMap error_map(const mdp::Policy& policy, const ThreatField& field, const Goal& goal,
                   const oracle::ValueTable& oracle_table, const oracle::NodeCost& cost,
                   int max_transitions, int threads) {
    synth::check_compatible(policy, field);
    if (oracle_table.grid.rows != field.grid.rows || oracle_table.grid.cols != field.grid.cols) {
        throw input_error("oracle grid does not match field grid");
    }

    const int n = field.grid.n_cells();
    ErrorMap map;
    map.grid = field.grid;
    map.goal_cell = goal.cell;
    map.percent_error.assign(n, kNaN);

    std::vector<char> reached(n, 0);
    auto worker = [&](int begin, int end) {
        for (int cell = begin; cell < end; ++cell) {
            if (cell == goal.cell) continue;
            const oracle::Path path =
                synth::synthesize_path(policy, field, goal, mdp::State{cell, 0}, max_transitions,
                                       mdp::FeatureVariant::Standard);
            if (!path.reached_goal) continue;
            reached[cell] = 1;
            const double learned = value_of_path(path, field, cost);
            const double optimal = oracle_table.value(cell, 0);
            map.percent_error[cell] = 100.0 * std::abs(learned - optimal) / optimal;
        }
    };
    if (threads <= 1) {
        worker(0, n);
    } else {
        std::vector<std::thread> pool;
        const int n_workers = std::min(threads, n);
        const int chunk = (n + n_workers - 1) / n_workers;
        for (int w = 0; w < n_workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(n, begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& t : pool) t.join();
    }

    int converged = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (int cell = 0; cell < n; ++cell) {
        if (cell == goal.cell || !reached[cell]) continue;
        const double e = map.percent_error[cell];
        ++converged;
        sum += e;
        sum_sq += e * e;
        map.max = std::max(map.max, e);
    }
    if (converged > 0) {
        map.mean = sum / converged;
        map.stddev = std::sqrt(std::max(0.0, sum_sq / converged - map.mean * map.mean));
    }
    map.converged_fraction = static_cast<double>(converged) / (n - 1);
    return map;
}

AggregateMaps aggregate_runs(const std::vector<ErrorMap>& maps) {
    if (maps.empty()) throw input_error("aggregate_runs needs at least one map");
    std::vector<const ErrorMap*> kept;
    for (const ErrorMap& m : maps) {
        if (m.grid != maps.front().grid || m.goal_cell != maps.front().goal_cell) {
            throw input_error("aggregate_runs: maps disagree on grid or goal");
        }
        if (m.converged_fraction >= 1.0) kept.push_back(&m);
    }
    if (kept.empty()) {
        throw input_error("aggregate_runs: every run was filtered for incomplete convergence");
    }

    const int n = maps.front().grid.n_cells();
    AggregateMaps agg;
    agg.grid = maps.front().grid;
    agg.goal_cell = maps.front().goal_cell;
    agg.runs_used = static_cast<int>(kept.size());
    agg.mean.assign(n, kNaN);
    agg.stddev.assign(n, kNaN);
    for (int cell = 0; cell < n; ++cell) {
        if (cell == agg.goal_cell) continue;
        double sum = 0.0, sum_sq = 0.0;
        for (const ErrorMap* m : kept) {
            sum += m->percent_error[cell];
            sum_sq += m->percent_error[cell] * m->percent_error[cell];
        }
        const double mean = sum / kept.size();
        agg.mean[cell] = mean;
        agg.stddev[cell] = std::sqrt(std::max(0.0, sum_sq / kept.size() - mean * mean));
    }
    return agg;
}

std::vector<double> path_encoding(const oracle::Path& path, const GridSpec& grid) {
    std::vector<double> enc(grid.n_cells(), 0.0);
    for (const mdp::State& s : path.states) {
        if (!grid.valid_cell(s.cell)) throw input_error("path state out of range");
        enc[s.cell] = 1.0;
    }
    return enc;
}

namespace {

// Dominant eigenpair of a symmetric PSD matrix by power iteration. Returns
// false when the spectrum is (numerically) zero in the remaining subspace.
bool power_iteration(const Eigen::MatrixXd& m, Eigen::VectorXd& vec, double& value) {
    const double trace = m.trace();
    if (!(trace > 0.0)) return false;

    // Deterministic start vector, decorrelated from grid axes.
    Eigen::VectorXd v(m.rows());
    Rng rng(0x9ca0d3a5u);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-1.0, 1.0);
    v.normalize();

    double lambda = 0.0;
    for (int iter = 0; iter < 100000; ++iter) {
        Eigen::VectorXd next = m * v;
        const double norm = next.norm();
        if (norm <= trace * 1e-15) return false;
        next /= norm;
        const double next_lambda = next.dot(m * next);
        const bool settled = std::abs(next_lambda - lambda) <= 1e-10 * std::max(1.0, next_lambda);
        v = next;
        lambda = next_lambda;
        if (settled && iter > 2) break;
    }
    if (!(lambda > trace * 1e-12)) return false;

    // Canonical sign: the largest-magnitude entry is positive.
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;

    vec = v;
    value = lambda;
    return true;
}

}  // namespace

PCAResult pca_discriminate(const oracle::PathDataset& a, const oracle::PathDataset& b,
                           const GridSpec& grid) {
    if (a.paths.empty() || b.paths.empty()) {
        throw input_error("pca_discriminate needs two non-empty datasets");
    }
    const std::size_t n = a.paths.size() + b.paths.size();
    PCAResult result;
    result.labels.reserve(n);

    // Pool occupancy encodings, one row per path.
    Eigen::MatrixXd enc = Eigen::MatrixXd::Zero(n, grid.n_cells());
    std::size_t row = 0;
    for (const oracle::PathDataset* ds : {&a, &b}) {
        const int label = ds == &a ? 0 : 1;
        for (const oracle::Path& p : ds->paths) {
            for (const mdp::State& s : p.states) {
                if (!grid.valid_cell(s.cell)) {
                    throw input_error("pca_discriminate: path cell outside the grid");
                }
                enc(row, s.cell) = 1.0;
            }
            result.labels.push_back(label);
            ++row;
        }
    }

    const Eigen::RowVectorXd mean = enc.colwise().mean();
    enc.rowwise() -= mean;
    const Eigen::MatrixXd cov = (enc.transpose() * enc) / static_cast<double>(n - 1);

    Eigen::MatrixXd deflated = cov;
    for (int k = 0; k < 3; ++k) {
        Eigen::VectorXd v;
        double lambda = 0.0;
        if (!power_iteration(deflated, v, lambda)) break;
        result.components.push_back(v);
        result.explained_variance.push_back(lambda);
        deflated -= lambda * v * v.transpose();
    }
    result.degenerate = result.components.size() < 3;

    result.projections.assign(n, {0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < result.components.size(); ++k) {
            result.projections[i][k] = enc.row(i).dot(result.components[k]);
        }
    }
    return result;
}

}  // namespace minexp::eval
