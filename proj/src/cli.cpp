#include "minexp/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

namespace minexp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

// Paths under base are recorded relative to it so re-runs into a different
// directory produce identical manifests (timestamps aside).
std::string relativize(const fs::path& p, const fs::path& base) {
    const fs::path abs_p = fs::absolute(p).lexically_normal();
    const fs::path abs_base = fs::absolute(base).lexically_normal();
    auto [base_end, p_it] = std::mismatch(abs_base.begin(), abs_base.end(), abs_p.begin(),
                                          abs_p.end());
    if (base_end != abs_base.end()) return p.string();
    fs::path rel;
    for (; p_it != abs_p.end(); ++p_it) rel /= *p_it;
    return rel.empty() ? std::string(".") : rel.string();
}

class ManifestBuilder {
public:
    ManifestBuilder(std::string subcommand, std::vector<std::string> command,
                    const fs::path& out_dir)
        : out_dir_(out_dir) {
        j_["format_version"] = io::kManifestFormatVersion;
        j_["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
        j_["subcommand"] = std::move(subcommand);
        for (std::string& token : command) token = relativize(token, out_dir_);
        j_["command"] = std::move(command);
        j_["started_at"] = io::iso8601_now();
        j_["inputs"] = json::array();
        j_["outputs"] = json::array();
    }

    void config(json resolved) { j_["resolved_config"] = std::move(resolved); }
    void seed(std::uint64_t s) { j_["seed"] = s; }

    void input(const fs::path& p) {
        j_["inputs"].push_back(
            {{"path", relativize(p, out_dir_)}, {"fnv1a64", io::fnv1a64_file(p)}});
    }
    void output(const fs::path& p) { j_["outputs"].push_back(relativize(p, out_dir_)); }

    void write(const fs::path& file) {
        j_["finished_at"] = io::iso8601_now();
        io::write_json(file, j_);
    }

private:
    fs::path out_dir_;
    json j_;
};

std::vector<mdp::State> parse_starts(const std::string& spec, const fieldgen::GridSpec& grid,
                                     const mdp::Goal& goal, std::uint64_t seed) {
    std::vector<mdp::State> all = oracle::all_non_goal_starts(grid, goal);
    if (spec == "all") return all;
    if (spec.rfind("random:", 0) == 0) {
        const int n = std::stoi(spec.substr(7));
        if (n < 1 || n > static_cast<int>(all.size())) {
            throw input_error("random start count must be in [1, " +
                              std::to_string(all.size()) + "]");
        }
        Rng rng(derive_seed(seed, 7));
        rng.shuffle(all);
        all.resize(n);
        std::sort(all.begin(), all.end(),
                  [](const mdp::State& a, const mdp::State& b) { return a.cell < b.cell; });
        return all;
    }
    throw input_error("starts must be 'all' or 'random:N', got '" + spec + "'");
}

json irl_config_json(const irl::IRLConfig& c) {
    return json{{"e_mu", c.convergence_threshold},
                {"m_i", c.max_iterations},
                {"m_e", c.episodes_per_iteration},
                {"m_p", c.max_path_transitions},
                {"eta_i", c.lr_weights},
                {"k_rollouts", c.rollouts_per_iteration},
                {"w0", c.initial_weights},
                {"weight_postprocess", irl::weight_postprocess_name(c.weight_postprocess)}};
}

json dql_config_json(const dql::DQLConfig& c) {
    return json{{"m_q", c.sweeps_per_call},
                {"eta_q", c.lr_q},
                {"eta_qprime", c.lr_target},
                {"eps0", c.eps_floor},
                {"eps1", c.eps_start},
                {"d", c.eps_decay},
                {"gamma", c.gamma},
                {"ell_bar", c.loss_reset_threshold},
                {"epsilon_mode", dql::epsilon_mode_name(c.epsilon_mode)},
                {"hidden_layers", c.hidden_layers}};
}

void write_history_csv(const fs::path& path, const std::vector<irl::IterationRecord>& history,
                       std::size_t weight_dim) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path.string());
    out << "iteration,error_norm,fraction_converged";
    for (std::size_t k = 0; k < weight_dim; ++k) out << ",w" << k;
    out << '\n';
    for (const auto& rec : history) {
        out << rec.iteration << ',' << fmt(rec.error_norm) << ',' << fmt(rec.fraction_converged);
        for (double w : rec.weights) out << ',' << fmt(w);
        out << '\n';
    }
}

mdp::Goal default_goal(const fieldgen::GridSpec& grid) { return mdp::Goal::max_corner(grid); }

mdp::Policy policy_from_model(const dql::QModel& model, const fieldgen::ThreatField& field) {
    if (model.grid.rows != field.grid.rows || model.grid.cols != field.grid.cols) {
        throw input_error("model grid shape does not match field grid");
    }
    if (model.dynamic_mode != field.grid.dynamic()) {
        throw input_error("static and dynamic models/fields cannot be mixed");
    }
    const mdp::Goal goal = mdp::Goal::at_cell(model.goal_cell, field.grid);
    return dql::greedy_policy(model, field, goal);
}

}  // namespace

irl::TrainingResult train_to_dir(const fieldgen::ThreatField& field,
                                 const oracle::PathDataset& dataset, const irl::IRLConfig& irl_cfg,
                                 const dql::DQLConfig& dql_cfg, std::uint64_t seed,
                                 const fs::path& run_dir, const fs::path& field_path,
                                 const fs::path& dataset_path,
                                 const std::function<void(const irl::IterationRecord&)>& on_iteration) {
    fs::create_directories(run_dir);
    const std::string field_ref = relativize(field_path, run_dir);
    const std::string dataset_ref = relativize(dataset_path, run_dir);

    ManifestBuilder manifest(
        "train",
        {"train", "--field", field_ref, "--dataset", dataset_ref, "--seed",
         std::to_string(seed), "--out", "."},
        run_dir);
    manifest.seed(seed);
    manifest.input(field_path);
    manifest.input(dataset_path);

    json config{{"format_version", 1},
                {"seed", seed},
                {"feature_variant", mdp::feature_variant_name(dataset.feature_variant)},
                {"field_ref", field_ref},
                {"dataset_ref", dataset_ref},
                {"irl", irl_config_json(irl_cfg)},
                {"dql", dql_config_json(dql_cfg)}};
    io::write_json(run_dir / "config.json", config);
    manifest.config(config);

    const mdp::Goal goal = default_goal(field.grid);
    irl::TrainingResult result =
        irl::irl_train(dataset, field, goal, irl_cfg, dql_cfg, seed, on_iteration);

    write_history_csv(run_dir / "history.csv", result.history, result.weights.w.size());
    json iterations = json::array();
    for (const auto& rec : result.history) {
        iterations.push_back(json{{"iteration", rec.iteration},
                                  {"error_norm", rec.error_norm},
                                  {"fraction_converged", rec.fraction_converged},
                                  {"weights", rec.weights}});
    }
    io::write_json(run_dir / "weights.json",
                   json{{"format_version", 1}, {"iterations", std::move(iterations)}});
    io::save_model(run_dir / "model.json", result.model, field_ref);

    for (const char* name : {"config.json", "history.csv", "weights.json", "model.json"}) {
        manifest.output(run_dir / name);
    }
    manifest.write(run_dir / "manifest.json");
    return result;
}

void write_error_map(const fs::path& out_dir, const eval::ErrorMap& map) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "error_map.csv");
    if (!out) throw input_error("cannot open for writing: " + (out_dir / "error_map.csv").string());
    out << "state,x,y,percent_error\n";
    for (int cell = 0; cell < map.grid.n_cells(); ++cell) {
        if (cell == map.goal_cell) continue;
        const auto [x, y] = map.grid.coord(cell);
        out << cell << ',' << fmt(x) << ',' << fmt(y) << ',' << fmt(map.percent_error[cell])
            << '\n';
    }
    io::write_json(out_dir / "summary.json", json{{"mean", map.mean},
                                                  {"max", map.max},
                                                  {"stddev", map.stddev},
                                                  {"converged_fraction", map.converged_fraction}});
}

void write_pca_csv(const fs::path& path, const eval::PCAResult& pca) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path.string());
    out << "# explained_variance";
    for (double v : pca.explained_variance) out << ',' << fmt(v);
    out << "\npath_id,label,pc1,pc2,pc3\n";
    for (std::size_t i = 0; i < pca.projections.size(); ++i) {
        out << i << ',' << (pca.labels[i] == 0 ? 'A' : 'B');
        for (int k = 0; k < 3; ++k) out << ',' << fmt(pca.projections[i][k]);
        out << '\n';
    }
}

namespace {

struct ExperimentSetup {
    std::string name;
    fieldgen::GridSpec grid;
    double threshold_mean = 0.0;
    double threshold_max = 0.0;
};

ExperimentSetup experiment_setup(PathExperiment kind) {
    switch (kind) {
        case PathExperiment::StaticSmall:
            return {"static-small", {10, 10, {-1, -1}, {1, 1}, 1, 1.0}, 3.0, 10.0};
        case PathExperiment::StaticPaper:
            return {"static-paper", {25, 25, {-1, -1}, {1, 1}, 1, 1.0}, 5.0, 20.0};
        case PathExperiment::DynamicSmall:
            return {"dynamic-small", {10, 10, {-1, -1}, {1, 1}, 20, 1.0}, 4.5, 15.0};
    }
    throw input_error("unknown experiment");
}

constexpr int kMaxAttempts = 6;  // initial run plus up to five retried seeds
constexpr int kDefaultNRbf = 10;

struct AttemptResult {
    fieldgen::ThreatField field;
    oracle::PathDataset expert;
    irl::TrainingResult training;
    eval::ErrorMap map;
    std::uint64_t attempt_seed = 0;
};

void print_iteration(const std::string& prefix, const irl::IterationRecord& rec) {
    std::cout << prefix << " iter " << rec.iteration << ": err " << rec.error_norm
              << ", converged " << 100.0 * rec.fraction_converged << "%, w = [";
    for (std::size_t i = 0; i < rec.weights.size(); ++i) {
        std::cout << (i ? ", " : "") << rec.weights[i];
    }
    std::cout << "]" << std::endl;
}

}  // namespace

PathExperimentReport run_path_experiment(PathExperiment kind, std::uint64_t seed,
                                         const fs::path& out_dir, int threads) {
    const ExperimentSetup setup = experiment_setup(kind);
    fs::create_directories(out_dir);

    PathExperimentReport report;
    report.name = setup.name;
    report.threshold_mean = setup.threshold_mean;
    report.threshold_max = setup.threshold_max;

    const irl::IRLConfig irl_cfg;
    const dql::DQLConfig dql_cfg;

    AttemptResult best;
    bool have_best = false;
    json attempts_log = json::array();
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        report.attempts = attempt + 1;
        const std::uint64_t attempt_seed = derive_seed(seed, 1000 + attempt);
        AttemptResult current;
        current.attempt_seed = attempt_seed;
        current.field =
            setup.grid.dynamic()
                ? fieldgen::generate_dynamic_field(derive_seed(attempt_seed, 1), setup.grid,
                                                   kDefaultNRbf)
                : fieldgen::generate_static_field(derive_seed(attempt_seed, 1), setup.grid,
                                                  kDefaultNRbf);
        const mdp::Goal goal = default_goal(setup.grid);
        current.expert = oracle::generate_expert_dataset(
            current.field, goal, oracle::all_non_goal_starts(setup.grid, goal),
            oracle::CostVariant::PureThreat, mdp::FeatureVariant::Standard);

        const std::string prefix = "[" + setup.name + " attempt " + std::to_string(attempt) + "]";
        current.training = irl::irl_train(
            current.expert, current.field, goal, irl_cfg, dql_cfg, derive_seed(attempt_seed, 2),
            [&prefix](const irl::IterationRecord& rec) { print_iteration(prefix, rec); });

        const oracle::ValueTable oracle_table =
            setup.grid.dynamic() ? oracle::dijkstra_dynamic(current.field, goal)
                                 : oracle::dijkstra_static(current.field, goal,
                                                           oracle::CostVariant::PureThreat);
        current.map = eval::error_map(current.training.policy, current.field, goal, oracle_table,
                                      irl_cfg.max_path_transitions, threads);

        attempts_log.push_back(json{{"attempt", attempt},
                                    {"seed", attempt_seed},
                                    {"converged_fraction", current.map.converged_fraction},
                                    {"mean_error", current.map.mean},
                                    {"max_error", current.map.max},
                                    {"irl_converged", current.training.converged}});

        if (!have_best || current.map.converged_fraction > best.map.converged_fraction) {
            best = std::move(current);
            have_best = true;
        }
        if (best.map.converged_fraction >= 1.0) break;
    }

    report.fully_converged = best.map.converged_fraction >= 1.0;
    report.irl_converged = best.training.converged;
    report.mean_error = best.map.mean;
    report.max_error = best.map.max;
    report.passed = report.fully_converged && report.mean_error <= setup.threshold_mean &&
                    report.max_error <= setup.threshold_max;

    // Artifacts for the accepted attempt.
    ManifestBuilder manifest(
        "repro", {"repro", setup.name, "--seed", std::to_string(seed), "--out", "."}, out_dir);
    manifest.seed(seed);
    io::save_field(out_dir / "field.json", best.field);
    io::save_dataset(out_dir / "expert.jsonl", best.expert);
    train_to_dir(best.field, best.expert, irl_cfg, dql_cfg, derive_seed(best.attempt_seed, 2),
                 out_dir / "train", out_dir / "field.json", out_dir / "expert.jsonl");
    write_error_map(out_dir / "eval", best.map);

    json report_json{{"experiment", setup.name},
                     {"seed", seed},
                     {"attempts", attempts_log},
                     {"accepted_seed", best.attempt_seed},
                     {"fully_converged", report.fully_converged},
                     {"irl_converged", report.irl_converged},
                     {"mean_error", report.mean_error},
                     {"max_error", report.max_error},
                     {"threshold_mean", report.threshold_mean},
                     {"threshold_max", report.threshold_max},
                     {"passed", report.passed}};
    io::write_json(out_dir / "report.json", report_json);
    manifest.config(json{{"experiment", setup.name},
                         {"irl", irl_config_json(irl_cfg)},
                         {"dql", dql_config_json(dql_cfg)},
                         {"threads", threads}});
    for (const char* name : {"field.json", "expert.jsonl", "report.json"}) {
        manifest.output(out_dir / name);
    }
    manifest.output(out_dir / "train");
    manifest.output(out_dir / "eval");
    manifest.write(out_dir / "manifest.json");

    std::cout << (report.passed ? "[PASS] " : "[FAIL] ") << setup.name << ": mean "
              << report.mean_error << "% (<= " << setup.threshold_mean << "), max "
              << report.max_error << "% (<= " << setup.threshold_max << "), "
              << (report.fully_converged ? "fully converged" : "NOT fully converged")
              << ", attempts " << report.attempts << std::endl;
    return report;
}

GeneralizationReport run_generalization(std::uint64_t seed, const fs::path& out_dir, int pairs,
                                        int threads) {
    if (pairs < 1) throw input_error("generalization needs at least one pair");
    fs::create_directories(out_dir);
    const fieldgen::GridSpec grid{10, 10, {-1, -1}, {1, 1}, 1, 1.0};
    const mdp::Goal goal = default_goal(grid);
    const irl::IRLConfig irl_cfg;
    const dql::DQLConfig dql_cfg;

    GeneralizationReport report;
    json pairs_log = json::array();
    for (int p = 0; p < pairs; ++p) {
        const std::uint64_t pair_seed = derive_seed(seed, 2000 + p);
        const fs::path pair_dir = out_dir / ("pair_" + std::to_string(p));
        fs::create_directories(pair_dir);

        const auto field_a =
            fieldgen::generate_static_field(derive_seed(pair_seed, 1), grid, kDefaultNRbf);
        const auto field_b =
            fieldgen::generate_static_field(derive_seed(pair_seed, 2), grid, kDefaultNRbf);
        io::save_field(pair_dir / "field_a.json", field_a);
        io::save_field(pair_dir / "field_b.json", field_b);
        const auto expert = oracle::generate_expert_dataset(
            field_a, goal, oracle::all_non_goal_starts(grid, goal), oracle::CostVariant::PureThreat,
            mdp::FeatureVariant::Standard);
        io::save_dataset(pair_dir / "expert.jsonl", expert);

        const oracle::ValueTable oracle_a =
            oracle::dijkstra_static(field_a, goal, oracle::CostVariant::PureThreat);
        const oracle::ValueTable oracle_b =
            oracle::dijkstra_static(field_b, goal, oracle::CostVariant::PureThreat);

        // Retrain with fresh seeds until the policy converges from every
        // start on the training field (the runs the paper filters out).
        irl::TrainingResult training;
        eval::ErrorMap map_a;
        bool have = false;
        std::uint64_t used_seed = 0;
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            const std::uint64_t train_seed = derive_seed(pair_seed, 10 + attempt);
            const std::string prefix =
                "[generalization pair " + std::to_string(p) + " attempt " + std::to_string(attempt) + "]";
            irl::TrainingResult candidate = irl::irl_train(
                expert, field_a, goal, irl_cfg, dql_cfg, train_seed,
                [&prefix](const irl::IterationRecord& rec) { print_iteration(prefix, rec); });
            eval::ErrorMap candidate_map =
                eval::error_map(candidate.policy, field_a, goal, oracle_a,
                                irl_cfg.max_path_transitions, threads);
            if (!have || candidate_map.converged_fraction > map_a.converged_fraction) {
                training = std::move(candidate);
                map_a = std::move(candidate_map);
                used_seed = train_seed;
                have = true;
            }
            if (map_a.converged_fraction >= 1.0) break;
        }
        io::save_model(pair_dir / "model.json", training.model, "field_a.json");

        const mdp::Policy policy_b = policy_from_model(training.model, field_b);
        const eval::ErrorMap map_b = eval::error_map(policy_b, field_b, goal, oracle_b,
                                                     irl_cfg.max_path_transitions, threads);
        write_error_map(pair_dir / "eval_a", map_a);
        write_error_map(pair_dir / "eval_b", map_b);

        GeneralizationPair entry{map_a.mean,  map_a.max, map_a.converged_fraction,
                                 map_b.mean,  map_b.max, map_b.converged_fraction,
                                 map_b.mean >= map_a.mean};
        report.pairs.push_back(entry);
        report.ordering_majority += entry.ordering_ok ? 1 : 0;
        report.worst_max_b = std::max(report.worst_max_b, entry.max_b);
        pairs_log.push_back(json{{"pair", p},
                                 {"train_seed", used_seed},
                                 {"mean_a", entry.mean_a},
                                 {"max_a", entry.max_a},
                                 {"fraction_a", entry.fraction_a},
                                 {"mean_b", entry.mean_b},
                                 {"max_b", entry.max_b},
                                 {"fraction_b", entry.fraction_b},
                                 {"ordering_ok", entry.ordering_ok}});
        std::cout << "[generalization pair " << p << "] mean A " << entry.mean_a << "%, mean B "
                  << entry.mean_b << "%, max B " << entry.max_b << "%" << std::endl;
    }

    report.passed = report.ordering_majority * 2 > pairs && report.worst_max_b <= 50.0;

    ManifestBuilder manifest(
        "repro", {"repro", "generalization", "--seed", std::to_string(seed), "--out", "."},
        out_dir);
    manifest.seed(seed);
    manifest.config(json{{"experiment", "generalization"},
                         {"pairs", pairs},
                         {"irl", irl_config_json(irl_cfg)},
                         {"dql", dql_config_json(dql_cfg)},
                         {"threads", threads}});
    json report_json{{"experiment", "generalization"},
                     {"seed", seed},
                     {"pairs", pairs_log},
                     {"ordering_majority", report.ordering_majority},
                     {"worst_max_b", report.worst_max_b},
                     {"passed", report.passed}};
    io::write_json(out_dir / "report.json", report_json);
    manifest.output(out_dir / "report.json");
    manifest.write(out_dir / "manifest.json");

    std::cout << (report.passed ? "[PASS] " : "[FAIL] ") << "generalization: ordering held on "
              << report.ordering_majority << "/" << pairs << " pairs, worst max on B "
              << report.worst_max_b << "% (<= 50%)" << std::endl;
    return report;
}

namespace {

bool paths_differ(const oracle::Path& a, const oracle::Path& b) {
    return a.states != b.states;
}

double differing_fraction(const oracle::PathDataset& a, const oracle::PathDataset& b) {
    std::size_t n = std::min(a.paths.size(), b.paths.size());
    std::size_t differing = 0;
    for (std::size_t i = 0; i < n; ++i) {
        differing += paths_differ(a.paths[i], b.paths[i]) ? 1 : 0;
    }
    return n == 0 ? 0.0 : static_cast<double>(differing) / static_cast<double>(n);
}

oracle::PathDataset sample_paths(const oracle::PathDataset& dataset, std::size_t n,
                                 std::uint64_t seed) {
    std::vector<std::size_t> indices(dataset.paths.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng rng(seed);
    rng.shuffle(indices);
    indices.resize(n);
    std::sort(indices.begin(), indices.end());
    oracle::PathDataset out;
    out.cost_variant = dataset.cost_variant;
    out.feature_variant = dataset.feature_variant;
    out.field_ref = dataset.field_ref;
    for (std::size_t i : indices) out.paths.push_back(dataset.paths[i]);
    return out;
}

// Fig.-8-like field for the discrimination experiment: a dominant bump just
// above-left of center (so the pure-threat and vertical-distance experts
// disagree about passing over or under it) plus a few smaller seeded bumps.
fieldgen::ThreatField discrimination_field(std::uint64_t seed, const fieldgen::GridSpec& grid) {
    Rng rng(seed);
    fieldgen::RbfMeta meta;
    meta.offset = 1.0;
    meta.seed = seed;
    const double span = 0.5 * ((grid.extent_max[0] - grid.extent_min[0]) +
                               (grid.extent_max[1] - grid.extent_min[1]));
    meta.centers.push_back({rng.uniform(-0.3, 0.0), rng.uniform(0.05, 0.3)});
    meta.widths.push_back(span * rng.uniform(0.18, 0.24));
    meta.coefficients.push_back(rng.uniform(5.0, 7.0));
    for (int k = 0; k < 4; ++k) {
        meta.centers.push_back(
            {rng.uniform(grid.extent_min[0], grid.extent_max[0]),
             rng.uniform(grid.extent_min[1], grid.extent_max[1])});
        meta.widths.push_back(span * rng.uniform(0.08, 0.18));
        meta.coefficients.push_back(rng.uniform(0.3, 1.5));
    }
    return fieldgen::field_from_rbfs(grid, meta);
}

}  // namespace

DiscriminationReport run_discrimination(std::uint64_t seed, const fs::path& out_dir, int threads) {
    fs::create_directories(out_dir);
    const fieldgen::GridSpec grid{25, 25, {-1, -1}, {1, 1}, 1, 1.0};
    const mdp::Goal goal = default_goal(grid);
    const auto starts = oracle::all_non_goal_starts(grid, goal);
    constexpr std::size_t kDatasetSize = 500;

    DiscriminationReport report;

    // Pick a field whose two expert oracles genuinely disagree on >= 10% of
    // start states before spending any training time on it.
    fieldgen::ThreatField field;
    oracle::PathDataset expert_a_full, expert_b_full;
    for (int attempt = 0; attempt < 10; ++attempt) {
        report.field_attempts = attempt + 1;
        field = discrimination_field(derive_seed(seed, 3000 + attempt), grid);
        expert_a_full = oracle::generate_expert_dataset(field, goal, starts,
                                                        oracle::CostVariant::PureThreat,
                                                        mdp::FeatureVariant::SplitDistance);
        expert_b_full = oracle::generate_expert_dataset(
            field, goal, starts, oracle::CostVariant::ThreatPlusVerticalDistance,
            mdp::FeatureVariant::SplitDistance);
        report.expert_differ_fraction = differing_fraction(expert_a_full, expert_b_full);
        if (report.expert_differ_fraction >= 0.10) break;
    }
    io::save_field(out_dir / "field.json", field);

    const oracle::PathDataset expert_a = sample_paths(expert_a_full, kDatasetSize,
                                                      derive_seed(seed, 3100));
    const oracle::PathDataset expert_b = sample_paths(expert_b_full, kDatasetSize,
                                                      derive_seed(seed, 3101));
    io::save_dataset(out_dir / "expert_a.jsonl", expert_a);
    io::save_dataset(out_dir / "expert_b.jsonl", expert_b);

    irl::IRLConfig irl_cfg;
    irl_cfg.initial_weights = {-1.0, -1.0, -1.0};
    const dql::DQLConfig dql_cfg;

    auto train_one = [&](const oracle::PathDataset& dataset, const std::string& tag,
                         std::uint64_t stream) {
        irl::TrainingResult best;
        double best_fraction = -1.0;
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            const std::string prefix = "[discrimination " + tag + " attempt " +
                                       std::to_string(attempt) + "]";
            irl::TrainingResult candidate = irl::irl_train(
                dataset, field, goal, irl_cfg, dql_cfg, derive_seed(seed, stream + attempt),
                [&prefix](const irl::IterationRecord& rec) { print_iteration(prefix, rec); });
            const auto rollouts = synth::synthesize_dataset(candidate.policy, field, goal, starts,
                                                            irl_cfg.max_path_transitions,
                                                            mdp::FeatureVariant::SplitDistance,
                                                            threads);
            const double fraction = rollouts.fraction_reached_goal();
            if (fraction > best_fraction) {
                best = std::move(candidate);
                best_fraction = fraction;
            }
            if (best_fraction >= 1.0) break;
        }
        return std::pair{std::move(best), best_fraction};
    };

    auto [training_a, fraction_a] = train_one(expert_a, "A", 3200);
    auto [training_b, fraction_b] = train_one(expert_b, "B", 3300);
    report.fraction_converged_a = fraction_a;
    report.fraction_converged_b = fraction_b;
    io::save_model(out_dir / "model_a.json", training_a.model, "field.json");
    io::save_model(out_dir / "model_b.json", training_b.model, "field.json");

    const auto synth_a = synth::synthesize_dataset(training_a.policy, field, goal, starts,
                                                   irl_cfg.max_path_transitions,
                                                   mdp::FeatureVariant::SplitDistance, threads);
    const auto synth_b = synth::synthesize_dataset(training_b.policy, field, goal, starts,
                                                   irl_cfg.max_path_transitions,
                                                   mdp::FeatureVariant::SplitDistance, threads);
    io::save_dataset(out_dir / "synth_a.jsonl", synth_a, "model_a.json", "field.json");
    io::save_dataset(out_dir / "synth_b.jsonl", synth_b, "model_b.json", "field.json");
    report.synth_differ_fraction = differing_fraction(synth_a, synth_b);

    const eval::PCAResult pca = eval::pca_discriminate(synth_a, synth_b, grid);
    write_pca_csv(out_dir / "pca.csv", pca);
    report.explained_variance = pca.explained_variance;

    if (!pca.components.empty()) {
        double mean[2] = {0.0, 0.0}, sq[2] = {0.0, 0.0};
        std::size_t count[2] = {0, 0};
        for (std::size_t i = 0; i < pca.projections.size(); ++i) {
            const int label = pca.labels[i];
            mean[label] += pca.projections[i][0];
            sq[label] += pca.projections[i][0] * pca.projections[i][0];
            ++count[label];
        }
        for (int c : {0, 1}) mean[c] /= static_cast<double>(count[c]);
        // Pooled within-class sample variance along the first component.
        const double ss_a = sq[0] - count[0] * mean[0] * mean[0];
        const double ss_b = sq[1] - count[1] * mean[1] * mean[1];
        const double pooled = (ss_a + ss_b) / static_cast<double>(count[0] + count[1] - 2);
        report.centroid_separation = std::abs(mean[0] - mean[1]);
        report.pooled_within_class_std = std::sqrt(std::max(0.0, pooled));
    }

    report.passed = report.expert_differ_fraction >= 0.10 &&
                    report.synth_differ_fraction >= 0.10 &&
                    report.centroid_separation > report.pooled_within_class_std;

    ManifestBuilder manifest(
        "repro", {"repro", "discrimination", "--seed", std::to_string(seed), "--out", "."},
        out_dir);
    manifest.seed(seed);
    manifest.config(json{{"experiment", "discrimination"},
                         {"dataset_size", kDatasetSize},
                         {"irl", irl_config_json(irl_cfg)},
                         {"dql", dql_config_json(dql_cfg)},
                         {"threads", threads}});
    json report_json{{"experiment", "discrimination"},
                     {"seed", seed},
                     {"field_attempts", report.field_attempts},
                     {"expert_differ_fraction", report.expert_differ_fraction},
                     {"synth_differ_fraction", report.synth_differ_fraction},
                     {"centroid_separation", report.centroid_separation},
                     {"pooled_within_class_std", report.pooled_within_class_std},
                     {"explained_variance", report.explained_variance},
                     {"fraction_converged_a", report.fraction_converged_a},
                     {"fraction_converged_b", report.fraction_converged_b},
                     {"passed", report.passed}};
    io::write_json(out_dir / "report.json", report_json);
    for (const char* name :
         {"field.json", "expert_a.jsonl", "expert_b.jsonl", "model_a.json", "model_b.json",
          "synth_a.jsonl", "synth_b.jsonl", "pca.csv", "report.json"}) {
        manifest.output(out_dir / name);
    }
    manifest.write(out_dir / "manifest.json");

    std::cout << (report.passed ? "[PASS] " : "[FAIL] ") << "discrimination: experts differ "
              << 100.0 * report.expert_differ_fraction << "%, synthesized differ "
              << 100.0 * report.synth_differ_fraction << "%, separation "
              << report.centroid_separation << " vs within-class std "
              << report.pooled_within_class_std << std::endl;
    return report;
}

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    int threads = 1;
};

int cmd_gen_field(std::uint64_t seed, int rows, int cols, int time_steps, int n_rbf,
                  std::vector<double> extent_min, std::vector<double> extent_max, double dt,
                  double coeff_min, double coeff_max, const std::string& out,
                  const std::vector<std::string>& command) {
    fieldgen::GridSpec grid{rows, cols, {extent_min[0], extent_min[1]},
                            {extent_max[0], extent_max[1]}, time_steps, dt};
    fieldgen::RbfParams params;
    params.coeff_min = coeff_min;
    params.coeff_max = coeff_max;
    const fieldgen::ThreatField field =
        grid.dynamic() ? fieldgen::generate_dynamic_field(seed, grid, n_rbf, params)
                       : fieldgen::generate_static_field(seed, grid, n_rbf, params);
    const fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    io::save_field(out_path, field);

    const fs::path base = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
    ManifestBuilder manifest("gen-field", command, base);
    manifest.seed(seed);
    manifest.config(json{{"rows", rows},
                         {"cols", cols},
                         {"time_steps", time_steps},
                         {"n_rbf", n_rbf},
                         {"extent_min", extent_min},
                         {"extent_max", extent_max},
                         {"dt", dt},
                         {"coeff_min", coeff_min},
                         {"coeff_max", coeff_max}});
    manifest.output(out_path);
    manifest.write(out_path.string() + ".manifest.json");
    std::cout << "wrote " << out << " (min " << field.min_value() << ", max "
              << field.max_value() << ")" << std::endl;
    return 0;
}

int cmd_gen_dataset(const std::string& field_path, const std::string& variant_name,
                    std::string features_name, const std::string& starts_spec,
                    std::uint64_t seed, const std::string& out,
                    const std::vector<std::string>& command) {
    const fieldgen::ThreatField field = io::load_field(field_path);
    const oracle::CostVariant variant = oracle::cost_variant_from_name(variant_name);
    if (features_name == "auto") {
        features_name = variant == oracle::CostVariant::PureThreat ? "standard" : "split";
    }
    const mdp::FeatureVariant features = mdp::feature_variant_from_name(features_name);
    const mdp::Goal goal = default_goal(field.grid);
    const auto starts = parse_starts(starts_spec, field.grid, goal, seed);
    oracle::PathDataset dataset =
        oracle::generate_expert_dataset(field, goal, starts, variant, features);
    dataset.field_ref = field_path;

    const fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    io::save_dataset(out_path, dataset);

    const fs::path base = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
    ManifestBuilder manifest("gen-dataset", command, base);
    manifest.seed(seed);
    manifest.config(json{{"variant", variant_name},
                         {"features", features_name},
                         {"starts", starts_spec}});
    manifest.input(field_path);
    manifest.output(out_path);
    manifest.write(out_path.string() + ".manifest.json");
    std::cout << "wrote " << out << " (" << dataset.paths.size() << " paths)" << std::endl;
    return 0;
}

int cmd_train(const std::string& field_path, const std::string& dataset_path, std::uint64_t seed,
              const std::string& out, const irl::IRLConfig& irl_cfg, const dql::DQLConfig& dql_cfg,
              const std::string& features_name) {
    const fieldgen::ThreatField field = io::load_field(field_path);
    const oracle::PathDataset dataset = io::load_dataset(dataset_path);
    if (features_name != "auto" &&
        mdp::feature_variant_from_name(features_name) != dataset.feature_variant) {
        throw input_error("requested feature variant disagrees with the dataset's phi length");
    }
    const irl::TrainingResult result = train_to_dir(
        field, dataset, irl_cfg, dql_cfg, seed, out, field_path, dataset_path,
        [](const irl::IterationRecord& rec) { print_iteration("[train]", rec); });
    std::cout << (result.converged ? "converged" : "did not converge") << " after "
              << result.history.size() << " iterations" << std::endl;
    return result.converged ? 0 : 3;
}

int cmd_synth(const std::string& model_path, const std::string& field_path,
              const std::string& starts_spec, std::uint64_t seed, int max_transitions,
              const std::string& out, int threads, const std::vector<std::string>& command) {
    const io::ModelFile loaded = io::load_model(model_path);
    const fieldgen::ThreatField field = io::load_field(field_path);
    const mdp::Policy policy = policy_from_model(loaded.model, field);
    const mdp::Goal goal = mdp::Goal::at_cell(loaded.model.goal_cell, field.grid);
    const auto starts = parse_starts(starts_spec, field.grid, goal, seed);
    const oracle::PathDataset dataset = synth::synthesize_dataset(
        policy, field, goal, starts, max_transitions, loaded.model.variant, threads);

    const fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    io::save_dataset(out_path, dataset, model_path, field_path);

    const fs::path base = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
    ManifestBuilder manifest("synth", command, base);
    manifest.seed(seed);
    manifest.config(json{{"starts", starts_spec}, {"max_transitions", max_transitions}});
    manifest.input(model_path);
    manifest.input(field_path);
    manifest.output(out_path);
    manifest.write(out_path.string() + ".manifest.json");
    std::cout << "wrote " << out << " (" << dataset.paths.size() << " paths, "
              << 100.0 * dataset.fraction_reached_goal() << "% reached the goal)" << std::endl;
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& field_path,
             const std::string& variant_name, int max_transitions, const std::string& out,
             int threads, const std::vector<std::string>& command) {
    const io::ModelFile loaded = io::load_model(model_path);
    const fieldgen::ThreatField field = io::load_field(field_path);
    const oracle::CostVariant variant = oracle::cost_variant_from_name(variant_name);
    if (field.grid.dynamic() && variant != oracle::CostVariant::PureThreat) {
        throw input_error("dynamic fields support only the pure threat oracle");
    }
    const mdp::Policy policy = policy_from_model(loaded.model, field);
    const mdp::Goal goal = mdp::Goal::at_cell(loaded.model.goal_cell, field.grid);
    const oracle::ValueTable table = field.grid.dynamic()
                                         ? oracle::dijkstra_dynamic(field, goal)
                                         : oracle::dijkstra_static(field, goal, variant);
    const eval::ErrorMap map =
        eval::error_map(policy, field, goal, table, max_transitions, threads);

    const fs::path out_dir(out);
    write_error_map(out_dir, map);
    ManifestBuilder manifest("eval", command, out_dir);
    manifest.config(json{{"oracle_variant", variant_name}, {"max_transitions", max_transitions}});
    manifest.input(model_path);
    manifest.input(field_path);
    manifest.output(out_dir / "error_map.csv");
    manifest.output(out_dir / "summary.json");
    manifest.write(out_dir / "manifest.json");
    std::cout << "mean " << map.mean << "%, max " << map.max << "%, converged "
              << 100.0 * map.converged_fraction << "%" << std::endl;
    return 0;
}

int cmd_pca(const std::string& a_path, const std::string& b_path, const std::string& field_path,
            const std::string& out, const std::vector<std::string>& command) {
    const oracle::PathDataset a = io::load_dataset(a_path);
    const oracle::PathDataset b = io::load_dataset(b_path);

    fieldgen::GridSpec grid;
    if (!field_path.empty()) {
        grid = io::load_field(field_path).grid;
    } else if (!a.field_ref.empty()) {
        const fs::path resolved = fs::path(a_path).parent_path() / a.field_ref;
        grid = io::load_field(resolved).grid;
    } else {
        throw input_error("pca needs --field (datasets carry no field reference)");
    }

    const eval::PCAResult pca = eval::pca_discriminate(a, b, grid);
    const fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_pca_csv(out_path, pca);

    const fs::path base = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
    ManifestBuilder manifest("pca", command, base);
    manifest.input(a_path);
    manifest.input(b_path);
    manifest.output(out_path);
    manifest.write(out_path.string() + ".manifest.json");
    std::cout << "wrote " << out << " (components: " << pca.components.size()
              << (pca.degenerate ? ", degenerate" : "") << ")" << std::endl;
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"learning and synthesis of minimum-exposure grid paths"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--threads", global.threads, "worker threads for rollouts/evaluation")
        ->envname("MINEXP_THREADS")
        ->check(CLI::PositiveNumber);

    // gen-field
    auto* gen_field = app.add_subcommand("gen-field", "generate a threat field");
    std::uint64_t gf_seed = 0;
    int gf_rows = 25, gf_cols = 25, gf_steps = 1, gf_nrbf = 10;
    std::vector<double> gf_emin{-1.0, -1.0}, gf_emax{1.0, 1.0};
    double gf_dt = 1.0;
    double gf_cmin = std::numeric_limits<double>::quiet_NaN(), gf_cmax = 5.0;
    std::string gf_out;
    gen_field->add_option("--seed", gf_seed, "generation seed")->required()->envname("MINEXP_SEED");
    gen_field->add_option("--rows", gf_rows)->envname("MINEXP_ROWS");
    gen_field->add_option("--cols", gf_cols)->envname("MINEXP_COLS");
    gen_field->add_option("--time-steps", gf_steps, "1 for static, >= 2 for dynamic")
        ->envname("MINEXP_TIME_STEPS");
    gen_field->add_option("--n-rbf", gf_nrbf)->envname("MINEXP_N_RBF");
    gen_field->add_option("--extent-min", gf_emin)->expected(2)->delimiter(',');
    gen_field->add_option("--extent-max", gf_emax)->expected(2)->delimiter(',');
    gen_field->add_option("--dt", gf_dt)->envname("MINEXP_DT");
    gen_field->add_option("--coeff-min", gf_cmin, "RBF coefficient lower bound (default: auto)");
    gen_field->add_option("--coeff-max", gf_cmax, "RBF coefficient upper bound");
    gen_field->add_option("--out", gf_out, "output field.json")->required()->envname("MINEXP_OUT");

    // gen-dataset
    auto* gen_dataset = app.add_subcommand("gen-dataset", "generate an expert path dataset");
    std::string gd_field, gd_variant = "pure", gd_features = "auto", gd_starts = "all", gd_out;
    std::uint64_t gd_seed = 0;
    gen_dataset->add_option("--field", gd_field)->required();
    gen_dataset->add_option("--variant", gd_variant, "pure|vertical")
        ->check(CLI::IsMember({"pure", "vertical"}));
    gen_dataset->add_option("--features", gd_features, "standard|split (default by variant)")
        ->check(CLI::IsMember({"auto", "standard", "split"}));
    gen_dataset->add_option("--starts", gd_starts, "all or random:N");
    gen_dataset->add_option("--seed", gd_seed);
    gen_dataset->add_option("--out", gd_out)->required();

    // train
    auto* train = app.add_subcommand("train", "IRL training");
    std::string tr_field, tr_dataset, tr_out, tr_features = "auto";
    std::uint64_t tr_seed = 0;
    irl::IRLConfig tr_irl;
    dql::DQLConfig tr_dql;
    std::string tr_eps_mode = "per-state", tr_postprocess = "clip-rescale";
    train->add_option("--field", tr_field)->required();
    train->add_option("--dataset", tr_dataset)->required();
    train->add_option("--seed", tr_seed)->envname("MINEXP_SEED");
    train->add_option("--out", tr_out)->required();
    train->add_option("--features", tr_features)->check(CLI::IsMember({"auto", "standard", "split"}));
    train->add_option("--e-mu", tr_irl.convergence_threshold)->envname("MINEXP_E_MU");
    train->add_option("--m-i", tr_irl.max_iterations)->envname("MINEXP_M_I");
    train->add_option("--m-e", tr_irl.episodes_per_iteration)->envname("MINEXP_M_E");
    train->add_option("--m-p", tr_irl.max_path_transitions)->envname("MINEXP_M_P");
    train->add_option("--eta-i", tr_irl.lr_weights)->envname("MINEXP_ETA_I");
    train->add_option("--k-rollouts", tr_irl.rollouts_per_iteration,
                      "rollout starts per iteration (0 = all non-goal states)");
    train->add_option("--w0", tr_irl.initial_weights)->delimiter(',');
    train->add_option("--postprocess", tr_postprocess)
        ->check(CLI::IsMember({"clip-rescale", "none"}));
    train->add_option("--m-q", tr_dql.sweeps_per_call)->envname("MINEXP_M_Q");
    train->add_option("--eta-q", tr_dql.lr_q)->envname("MINEXP_ETA_Q");
    train->add_option("--eta-qprime", tr_dql.lr_target)->envname("MINEXP_ETA_QPRIME");
    train->add_option("--eps0", tr_dql.eps_floor)->envname("MINEXP_EPS0");
    train->add_option("--eps1", tr_dql.eps_start)->envname("MINEXP_EPS1");
    train->add_option("--d", tr_dql.eps_decay)->envname("MINEXP_D");
    train->add_option("--gamma", tr_dql.gamma)->envname("MINEXP_GAMMA");
    train->add_option("--ell-bar", tr_dql.loss_reset_threshold)->envname("MINEXP_ELL_BAR");
    train->add_option("--epsilon-mode", tr_eps_mode)
        ->check(CLI::IsMember({"per-state", "per-sweep"}));
    train->add_option("--hidden", tr_dql.hidden_layers)->delimiter(',');

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "synthesize paths from a trained model");
    std::string sy_model, sy_field, sy_starts = "all", sy_out;
    std::uint64_t sy_seed = 0;
    int sy_mp = 500;
    synth_cmd->add_option("--model", sy_model)->required();
    synth_cmd->add_option("--field", sy_field)->required();
    synth_cmd->add_option("--starts", sy_starts, "all or random:N");
    synth_cmd->add_option("--seed", sy_seed);
    synth_cmd->add_option("--m-p", sy_mp, "max transitions per path");
    synth_cmd->add_option("--out", sy_out)->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "error map of a model against the oracle");
    std::string ev_model, ev_field, ev_variant = "pure", ev_out;
    int ev_mp = 500;
    eval_cmd->add_option("--model", ev_model)->required();
    eval_cmd->add_option("--field", ev_field)->required();
    eval_cmd->add_option("--oracle-variant", ev_variant)
        ->check(CLI::IsMember({"pure", "vertical"}));
    eval_cmd->add_option("--m-p", ev_mp, "max transitions per rollout");
    eval_cmd->add_option("--out", ev_out)->required();

    // pca
    auto* pca_cmd = app.add_subcommand("pca", "principal components of two path datasets");
    std::string pc_a, pc_b, pc_field, pc_out;
    pca_cmd->add_option("--a", pc_a)->required();
    pca_cmd->add_option("--b", pc_b)->required();
    pca_cmd->add_option("--field", pc_field, "field defining the grid (else from a's header)");
    pca_cmd->add_option("--out", pc_out)->required();

    // repro
    auto* repro = app.add_subcommand("repro", "run a canned end-to-end experiment");
    std::string rp_experiment, rp_out;
    std::uint64_t rp_seed = 0;
    int rp_pairs = 5;
    repro->add_option("experiment", rp_experiment, "experiment name")
        ->required()
        ->check(CLI::IsMember({"static-small", "static-paper", "dynamic-small", "generalization",
                               "discrimination"}));
    repro->add_option("--seed", rp_seed)->envname("MINEXP_SEED");
    repro->add_option("--out", rp_out)->required();
    repro->add_option("--pairs", rp_pairs, "field pairs for the generalization experiment");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    std::vector<std::string> command = args;
    try {
        if (*gen_field) {
            return cmd_gen_field(gf_seed, gf_rows, gf_cols, gf_steps, gf_nrbf, gf_emin, gf_emax,
                                 gf_dt, gf_cmin, gf_cmax, gf_out, command);
        }
        if (*gen_dataset) {
            return cmd_gen_dataset(gd_field, gd_variant, gd_features, gd_starts, gd_seed, gd_out,
                                   command);
        }
        if (*train) {
            tr_dql.epsilon_mode = dql::epsilon_mode_from_name(tr_eps_mode);
            tr_irl.weight_postprocess = irl::weight_postprocess_from_name(tr_postprocess);
            return cmd_train(tr_field, tr_dataset, tr_seed, tr_out, tr_irl, tr_dql, tr_features);
        }
        if (*synth_cmd) {
            return cmd_synth(sy_model, sy_field, sy_starts, sy_seed, sy_mp, sy_out,
                             global.threads, command);
        }
        if (*eval_cmd) {
            return cmd_eval(ev_model, ev_field, ev_variant, ev_mp, ev_out, global.threads,
                            command);
        }
        if (*pca_cmd) {
            return cmd_pca(pc_a, pc_b, pc_field, pc_out, command);
        }
        if (*repro) {
            if (rp_experiment == "static-small") {
                run_path_experiment(PathExperiment::StaticSmall, rp_seed, rp_out, global.threads);
            } else if (rp_experiment == "static-paper") {
                run_path_experiment(PathExperiment::StaticPaper, rp_seed, rp_out, global.threads);
            } else if (rp_experiment == "dynamic-small") {
                run_path_experiment(PathExperiment::DynamicSmall, rp_seed, rp_out, global.threads);
            } else if (rp_experiment == "generalization") {
                run_generalization(rp_seed, rp_out, rp_pairs, global.threads);
            } else {
                run_discrimination(rp_seed, rp_out, global.threads);
            }
            return 0;
        }
    } catch (const divergence_error& e) {
        std::cerr << "training diverged: " << e.what() << std::endl;
        return 2;
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 1;
}

}  // namespace minexp::cli
