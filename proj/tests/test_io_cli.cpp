#include <doctest.h>

#include <fstream>

#include "minexp/cli.hpp"
#include "support/tmpdir.hpp"

using namespace minexp;
using test_support::TmpDir;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::vector<std::string>& args) { return cli::run(args); }

}  // namespace

TEST_CASE("field files round-trip bit-exactly") {
    TmpDir tmp("field-io");
    const fieldgen::GridSpec grid{6, 5, {-1, -1}, {1, 1}, 3, 0.5};
    const auto field = fieldgen::generate_dynamic_field(77, grid, 4);
    const fs::path path = tmp.path() / "field.json";
    io::save_field(path, field);
    const auto loaded = io::load_field(path);
    CHECK(loaded.grid == field.grid);
    CHECK(loaded.values == field.values);
    REQUIRE(loaded.rbf_meta.size() == field.rbf_meta.size());
    CHECK(loaded.rbf_meta[0].coefficients == field.rbf_meta[0].coefficients);
}

TEST_CASE("unsupported format versions are rejected") {
    TmpDir tmp("version");
    const fs::path path = tmp.path() / "field.json";
    {
        std::ofstream out(path);
        out << R"({"format_version": 99, "grid": {}, "values": []})";
    }
    CHECK_THROWS_AS(io::load_field(path), input_error);
}

TEST_CASE("datasets round-trip through JSONL") {
    TmpDir tmp("dataset-io");
    const fieldgen::GridSpec grid{4, 4, {-1, -1}, {1, 1}, 1, 1.0};
    const auto field = fieldgen::generate_static_field(5, grid, 4);
    const auto goal = mdp::Goal::max_corner(grid);
    const auto dataset = oracle::generate_expert_dataset(
        field, goal, oracle::all_non_goal_starts(grid, goal), oracle::CostVariant::PureThreat,
        mdp::FeatureVariant::Standard);

    const fs::path path = tmp.path() / "expert.jsonl";
    io::save_dataset(path, dataset);
    const auto loaded = io::load_dataset(path);
    REQUIRE(loaded.size() == dataset.size());
    CHECK(loaded.feature_variant == mdp::FeatureVariant::Standard);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        CHECK(loaded.paths[i].states == dataset.paths[i].states);
        CHECK(loaded.paths[i].cost == dataset.paths[i].cost);
        CHECK(loaded.paths[i].phi == dataset.paths[i].phi);
        CHECK(loaded.paths[i].reached_goal == dataset.paths[i].reached_goal);
    }

    // The synthesized form carries a header line that the loader skips.
    io::save_dataset(path, dataset, "model.json", "field.json");
    const auto with_header = io::load_dataset(path);
    CHECK(with_header.size() == dataset.size());
    CHECK(with_header.field_ref == "field.json");
}

TEST_CASE("models round-trip with exact parameters and rng state") {
    TmpDir tmp("model-io");
    const fieldgen::GridSpec grid{5, 5, {-1, -1}, {1, 1}, 1, 1.0};
    const auto field = fieldgen::generate_static_field(15, grid, 5);
    const auto goal = mdp::Goal::max_corner(grid);
    dql::DQLConfig cfg;
    cfg.hidden_layers = {16, 8};
    dql::QModel model = dql::QModel::initialize(field, goal, mdp::FeatureVariant::Standard, cfg, 9);
    const dql::SweepWorkspace ws =
        dql::SweepWorkspace::build(field, goal, model.variant, model.norm);
    const Eigen::MatrixXd rewards =
        ws.rewards(mdp::RewardWeights{{-1.0, -1.0}, mdp::FeatureVariant::Standard});
    for (int k = 0; k < 3; ++k) dql::run_dql_sweeps(model, ws, rewards, cfg);

    const fs::path path = tmp.path() / "model.json";
    io::save_model(path, model, "field.json");
    const io::ModelFile loaded = io::load_model(path);
    CHECK(loaded.field_ref == "field.json");
    CHECK(loaded.model.theta.parameter_distance(model.theta) == 0.0);
    CHECK(loaded.model.theta_prime.parameter_distance(model.theta_prime) == 0.0);
    CHECK(loaded.model.global_iteration == model.global_iteration);
    CHECK(loaded.model.rng.state() == model.rng.state());
    CHECK(loaded.model.norm.threat_scale == model.norm.threat_scale);

    // The reloaded model keeps training identically to the original.
    dql::QModel original = model;
    dql::QModel restored = loaded.model;
    dql::run_dql_sweeps(original, ws, rewards, cfg);
    dql::run_dql_sweeps(restored, ws, rewards, cfg);
    CHECK(original.theta.parameter_distance(restored.theta) == 0.0);
}

TEST_CASE("gen-field CLI writes a loadable field plus manifest") {
    TmpDir tmp("cli-genfield");
    const fs::path out = tmp.path() / "field.json";
    const int code = run_cli({"gen-field", "--seed", "7", "--rows", "9", "--cols", "9", "--out",
                              out.string()});
    CHECK(code == 0);
    const auto field = io::load_field(out);
    CHECK(field.grid.rows == 9);
    CHECK(field.min_value() > 0.0);
    CHECK(fs::exists(tmp.path() / "field.json.manifest.json"));
    const auto manifest = io::read_json(tmp.path() / "field.json.manifest.json");
    CHECK(manifest["subcommand"] == "gen-field");
    CHECK(manifest["outputs"][0] == "field.json");
}

TEST_CASE("unknown flags exit with code 1") {
    CHECK(run_cli({"gen-field", "--frobnicate", "1"}) == 1);
    CHECK(run_cli({"no-such-command"}) == 1);
    CHECK(run_cli({}) == 1);
}

TEST_CASE("gen-dataset then train then synth and eval work end to end") {
    TmpDir tmp("cli-pipeline");
    const fs::path field_path = tmp.path() / "field.json";
    const fs::path dataset_path = tmp.path() / "expert.jsonl";
    const fs::path run_dir = tmp.path() / "run";

    REQUIRE(run_cli({"gen-field", "--seed", "3", "--rows", "5", "--cols", "5", "--out",
                     field_path.string()}) == 0);
    REQUIRE(run_cli({"gen-dataset", "--field", field_path.string(), "--variant", "pure",
                     "--starts", "random:10", "--seed", "4", "--out",
                     dataset_path.string()}) == 0);
    const auto dataset = io::load_dataset(dataset_path);
    CHECK(dataset.size() == 10);

    // A deliberately tiny training run; non-convergence (exit 3) is expected
    // and the artifacts must still land on disk.
    const int train_code = run_cli({"train", "--field", field_path.string(), "--dataset",
                                    dataset_path.string(), "--seed", "5", "--out",
                                    run_dir.string(), "--m-i", "2", "--m-e", "5", "--m-q", "5",
                                    "--hidden", "8"});
    CHECK((train_code == 0 || train_code == 3));
    for (const char* name : {"config.json", "history.csv", "weights.json", "model.json",
                             "manifest.json"}) {
        CHECK(fs::exists(run_dir / name));
    }
    const auto config = io::read_json(run_dir / "config.json");
    CHECK(config["irl"]["m_p"] == 500);
    CHECK(config["irl"]["m_e"] == 5);
    CHECK(config["dql"]["eta_q"] == 0.005);

    const fs::path synth_path = tmp.path() / "synth.jsonl";
    REQUIRE(run_cli({"synth", "--model", (run_dir / "model.json").string(), "--field",
                     field_path.string(), "--starts", "all", "--out",
                     synth_path.string()}) == 0);
    const auto synth_ds = io::load_dataset(synth_path);
    CHECK(synth_ds.size() == 24);

    const fs::path eval_dir = tmp.path() / "eval";
    REQUIRE(run_cli({"eval", "--model", (run_dir / "model.json").string(), "--field",
                     field_path.string(), "--oracle-variant", "pure", "--out",
                     eval_dir.string()}) == 0);
    CHECK(fs::exists(eval_dir / "error_map.csv"));
    CHECK(fs::exists(eval_dir / "summary.json"));

    const fs::path pca_path = tmp.path() / "pca.csv";
    REQUIRE(run_cli({"pca", "--a", synth_path.string(), "--b", synth_path.string(), "--field",
                     field_path.string(), "--out", pca_path.string()}) == 0);
    CHECK(fs::exists(pca_path));
}

TEST_CASE("train manifest records the tuned defaults") {
    TmpDir tmp("cli-defaults");
    const fs::path field_path = tmp.path() / "field.json";
    const fs::path dataset_path = tmp.path() / "expert.jsonl";
    REQUIRE(run_cli({"gen-field", "--seed", "11", "--rows", "4", "--cols", "4", "--out",
                     field_path.string()}) == 0);
    REQUIRE(run_cli({"gen-dataset", "--field", field_path.string(), "--out",
                     dataset_path.string()}) == 0);
    const fs::path run_dir = tmp.path() / "run";
    const int code = run_cli({"train", "--field", field_path.string(), "--dataset",
                              dataset_path.string(), "--seed", "1", "--out", run_dir.string(),
                              "--m-i", "1", "--m-e", "1", "--m-q", "1", "--hidden", "4"});
    CHECK((code == 0 || code == 3));
    const auto manifest = io::read_json(run_dir / "manifest.json");
    const auto& cfg = manifest["resolved_config"];
    CHECK(cfg["irl"]["m_p"] == 500);
    CHECK(cfg["irl"]["eta_i"] == 0.01);
    CHECK(cfg["irl"]["e_mu"] == 0.01);
    CHECK(cfg["dql"]["eta_q"] == 0.005);
    CHECK(cfg["dql"]["eta_qprime"] == 0.001);
    CHECK(cfg["dql"]["eps0"] == 0.051);
    CHECK(cfg["dql"]["eps1"] == 0.95);
    CHECK(cfg["dql"]["d"] == 500.0);
    CHECK(cfg["dql"]["ell_bar"] == 0.5);
}

TEST_CASE("vertical oracle is rejected on dynamic fields") {
    TmpDir tmp("cli-dynamic-vertical");
    const fs::path field_path = tmp.path() / "field.json";
    REQUIRE(run_cli({"gen-field", "--seed", "2", "--rows", "4", "--cols", "4", "--time-steps",
                     "4", "--out", field_path.string()}) == 0);
    const int code = run_cli({"gen-dataset", "--field", field_path.string(), "--variant",
                              "vertical", "--out", (tmp.path() / "d.jsonl").string()});
    CHECK(code == 1);
}
