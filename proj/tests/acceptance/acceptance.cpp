#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "minexp/cli.hpp"
#include "../support/brute_force.hpp"
#include "../support/tmpdir.hpp"

using namespace minexp;
using test_support::TmpDir;
namespace fs = std::filesystem;

namespace {

void report(int criterion, const std::string& what, bool pass) {
    std::printf("%s criterion %d: %s\n", pass ? "[PASS]" : "[FAIL]", criterion, what.c_str());
    std::fflush(stdout);
    CHECK_MESSAGE(pass, "criterion ", criterion, ": ", what);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Byte comparison of two run directories, with manifest timestamps ignored.
bool dirs_match(const fs::path& a, const fs::path& b, std::string& diff) {
    auto listing = [](const fs::path& root) {
        std::vector<fs::path> rel;
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), root));
        }
        std::sort(rel.begin(), rel.end());
        return rel;
    };
    const auto la = listing(a), lb = listing(b);
    if (la != lb) {
        diff = "file listings differ";
        return false;
    }
    for (const auto& rel : la) {
        const bool is_manifest = rel.filename() == "manifest.json" ||
                                 rel.filename().string().ends_with(".manifest.json");
        if (is_manifest) {
            auto ja = io::read_json(a / rel);
            auto jb = io::read_json(b / rel);
            for (auto* j : {&ja, &jb}) {
                j->erase("started_at");
                j->erase("finished_at");
            }
            if (ja != jb) {
                diff = "manifest mismatch: " + rel.string();
                return false;
            }
        } else if (read_file(a / rel) != read_file(b / rel)) {
            diff = "byte mismatch: " + rel.string();
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("criterion 1: oracle values match exhaustive enumeration") {
    const fieldgen::GridSpec grid{4, 4, {-1, -1}, {1, 1}, 1, 1.0};
    bool all_exact = true;

    for (std::uint64_t seed = 0; seed < 20 && all_exact; ++seed) {
        const auto field = fieldgen::generate_static_field(seed, grid, 6);
        const auto goal = mdp::Goal::max_corner(grid);
        for (const auto variant : {oracle::CostVariant::PureThreat,
                                   oracle::CostVariant::ThreatPlusVerticalDistance}) {
            const auto table = oracle::dijkstra_static(field, goal, variant);
            const auto cost = oracle::node_cost_function(variant, field, goal);
            for (int cell = 0; cell < grid.n_cells(); ++cell) {
                const double brute =
                    test_support::brute_force_static_value(field, goal, cell, cost);
                if (std::abs(table.value(cell) - brute) > 1e-9 * std::abs(brute)) {
                    all_exact = false;
                }
            }
        }
    }

    fieldgen::GridSpec dyn = grid;
    dyn.n_time_steps = 6;
    for (std::uint64_t seed = 50; seed < 60 && all_exact; ++seed) {
        const auto field = fieldgen::generate_dynamic_field(seed, dyn, 6);
        const auto goal = mdp::Goal::max_corner(dyn);
        const auto table = oracle::dijkstra_dynamic(field, goal);
        for (int cell = 0; cell < dyn.n_cells(); ++cell) {
            const double brute = test_support::brute_force_dynamic_value(field, goal, cell, 12);
            if (std::abs(table.value(cell, 0) - brute) > 1e-9 * std::abs(brute)) {
                all_exact = false;
            }
        }
    }
    report(1, "Dijkstra matches exhaustive enumeration on 20 static + 10 dynamic fields",
           all_exact);
}

TEST_CASE("criterion 2: known-reward DQL tracks the same-reward oracle") {
    const fieldgen::GridSpec grid{10, 10, {-1, -1}, {1, 1}, 1, 1.0};
    const auto field = fieldgen::generate_static_field(derive_seed(2025, 1), grid, 10);
    const auto goal = mdp::Goal::max_corner(grid);
    const mdp::RewardWeights w{{-1.0, -1.0}, mdp::FeatureVariant::Standard};

    dql::DQLConfig cfg;
    dql::QModel model = dql::QModel::initialize(field, goal, mdp::FeatureVariant::Standard, cfg,
                                                derive_seed(2025, 2));
    const auto ws = dql::SweepWorkspace::build(field, goal, model.variant, model.norm);
    const Eigen::MatrixXd rewards = ws.rewards(w);
    for (int episode = 0; episode < 1200; ++episode) {
        dql::run_dql_sweeps(model, ws, rewards, cfg);
    }
    const mdp::Policy policy = dql::greedy_policy(model, ws);

    const oracle::NodeCost cost = [&](int cell, int t) {
        const auto [x, y] = grid.coord(cell);
        return field.at(cell, t) / model.norm.threat_scale +
               std::hypot(x - goal.coord[0], y - goal.coord[1]) / model.norm.distance_scale;
    };
    const auto table = oracle::dijkstra_static(field, goal, cost);

    int good = 0, total = 0;
    for (int cell = 0; cell < grid.n_cells(); ++cell) {
        if (cell == goal.cell) continue;
        ++total;
        const auto path = synth::synthesize_path(policy, field, goal, mdp::State{cell, 0}, 500,
                                                 mdp::FeatureVariant::Standard);
        if (!path.reached_goal) continue;
        if (eval::value_of_path(path, field, cost) <= table.value(cell) * 1.05) ++good;
    }
    std::ostringstream msg;
    msg << "fixed-weight policy within 5% of the same-reward oracle on " << good << "/" << total
        << " starts (need >= 90%)";
    report(2, msg.str(), good * 10 >= total * 9);
}

TEST_CASE("criterion 3: paper-scale static IRL reproduction") {
    TmpDir tmp("accept-static-paper");
    const auto rep = cli::run_path_experiment(cli::PathExperiment::StaticPaper, 1, tmp.path());
    std::ostringstream msg;
    msg << "25x25 IRL: mean " << rep.mean_error << "% (<= 5), max " << rep.max_error
        << "% (<= 20), fully converged " << (rep.fully_converged ? "yes" : "no") << ", attempts "
        << rep.attempts;
    report(3, msg.str(), rep.passed);
}

TEST_CASE("criterion 4: desk-scale static IRL") {
    TmpDir tmp("accept-static-small");
    const auto rep = cli::run_path_experiment(cli::PathExperiment::StaticSmall, 1, tmp.path());
    std::ostringstream msg;
    msg << "10x10 IRL: mean " << rep.mean_error << "% (<= 3), max " << rep.max_error
        << "% (<= 10), fully converged " << (rep.fully_converged ? "yes" : "no") << ", attempts "
        << rep.attempts;
    report(4, msg.str(), rep.passed);
}

TEST_CASE("criterion 5: dynamic IRL within 1.5x of the static thresholds") {
    TmpDir tmp("accept-dynamic");
    const auto rep = cli::run_path_experiment(cli::PathExperiment::DynamicSmall, 1, tmp.path());
    std::ostringstream msg;
    msg << "10x10x20 IRL: mean " << rep.mean_error << "% (<= 4.5), max " << rep.max_error
        << "% (<= 15), fully converged " << (rep.fully_converged ? "yes" : "no") << ", attempts "
        << rep.attempts;
    report(5, msg.str(), rep.passed);
}

TEST_CASE("criterion 6: generalization to unseen fields") {
    TmpDir tmp("accept-generalization");
    const auto rep = cli::run_generalization(1, tmp.path(), 5);
    std::ostringstream msg;
    msg << "unseen-field error ordering held on " << rep.ordering_majority
        << "/5 pairs (need majority), worst max on B " << rep.worst_max_b << "% (<= 50)";
    report(6, msg.str(), rep.passed);
}

TEST_CASE("criterion 7: policy discrimination with split-distance features") {
    TmpDir tmp("accept-discrimination");
    const auto rep = cli::run_discrimination(1, tmp.path());
    std::ostringstream msg;
    msg << "experts differ on " << 100.0 * rep.expert_differ_fraction
        << "% of starts, synthesized differ on " << 100.0 * rep.synth_differ_fraction
        << "% (need >= 10%), PC1 centroid separation " << rep.centroid_separation
        << " vs within-class std " << rep.pooled_within_class_std;
    report(7, msg.str(), rep.passed);
}

TEST_CASE("criterion 8: algebraic unit suite at 1e-12") {
    bool ok = true;

    const dql::DQLConfig cfg;
    ok = ok && std::abs(dql::epsilon(0, cfg) - 0.95) <= 1e-12;
    ok = ok && std::abs(dql::epsilon(500, cfg) -
                        (0.051 + (0.95 - 0.051) * std::exp(-1.0))) <= 1e-12;
    ok = ok && std::abs(dql::epsilon(500, cfg) - 0.38172) <= 1e-4;
    ok = ok && std::abs(dql::epsilon(5000000, cfg) - 0.051) <= 1e-12;

    const auto proj_a = irl::projection_update({2.0, 3.0}, {1.0, 0.0});
    ok = ok && std::abs(proj_a[0] - 4.0) <= 1e-12 && std::abs(proj_a[1] - 3.0) <= 1e-12;
    const auto proj_b = irl::projection_update({1.0, 1.0}, {0.0, 2.0});
    ok = ok && std::abs(proj_b[0] - 1.0) <= 1e-12 && std::abs(proj_b[1] - 3.0) <= 1e-12;
    const auto proj_zero = irl::projection_update({2.0, 3.0}, {0.0, 0.0});
    ok = ok && proj_zero == std::vector<double>{2.0, 3.0};

    const auto blend = irl::blend_weights({-1.0, -1.0}, {0.0, 0.0}, 0.01);
    ok = ok && std::abs(blend[0] + 0.99) <= 1e-12 && std::abs(blend[1] + 0.99) <= 1e-12;

    // Reward == feature-block dot product, every state and valid action of a
    // seeded random 5x5 field.
    const fieldgen::GridSpec grid{5, 5, {-1, -1}, {1, 1}, 1, 1.0};
    const auto field = fieldgen::generate_static_field(808, grid, 6);
    const auto goal = mdp::Goal::max_corner(grid);
    const mdp::RewardWeights w{{-1.0, -0.7}, mdp::FeatureVariant::Standard};
    for (int cell = 0; cell < grid.n_cells() && ok; ++cell) {
        const mdp::State s{cell, 0};
        const auto phi = mdp::feature_vector(s, field, goal, w.variant);
        for (const auto& [a, next] : mdp::neighbors(s, grid)) {
            const int offset = 2 * (1 + static_cast<int>(a));
            const double dot = w.w[0] * phi[offset] + w.w[1] * phi[offset + 1];
            const double r = mdp::reward(s, a, next, w, field, goal);
            if (std::abs(r - dot) > 1e-12 * std::max(1.0, std::abs(dot))) ok = false;
        }
    }
    report(8, "epsilon schedule, projection, blend, and feature/reward identities", ok);
}

TEST_CASE("criterion 9: repeated repro runs are byte-identical") {
    TmpDir tmp("accept-determinism");
    const fs::path run1 = tmp.path() / "run1";
    const fs::path run2 = tmp.path() / "run2";
    const int code1 = cli::run({"repro", "static-small", "--seed", "1", "--out", run1.string()});
    const int code2 = cli::run({"repro", "static-small", "--seed", "1", "--out", run2.string()});
    std::string diff = "exit codes";
    bool ok = code1 == 0 && code2 == 0;
    if (ok) ok = dirs_match(run1, run2, diff);
    report(9, ok ? "two repro runs produced byte-identical artifacts"
                 : "determinism violated (" + diff + ")",
           ok);
}
