#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "minexp/eval.hpp"
#include "minexp/irl.hpp"
#include "minexp/io.hpp"

namespace minexp::cli {

// Exit codes: 0 success, 1 input error, 2 training divergence,
// 3 IRL non-convergence (train only; artifacts are still written).
int run(const std::vector<std::string>& args);

// End-to-end experiments, callable as a library (the repro subcommand and
// the acceptance suite share these). Each writes its artifacts plus a
// report.json and manifest.json under out_dir.

enum class PathExperiment { StaticSmall, StaticPaper, DynamicSmall };

struct PathExperimentReport {
    std::string name;
    int attempts = 0;               // training attempts used (new seed per attempt)
    bool fully_converged = false;   // final policy reached the goal from every start
    bool irl_converged = false;     // feature-expectation match below e_mu
    double mean_error = 0.0;
    double max_error = 0.0;
    double threshold_mean = 0.0;
    double threshold_max = 0.0;
    bool passed = false;
};

PathExperimentReport run_path_experiment(PathExperiment kind, std::uint64_t seed,
                                         const std::filesystem::path& out_dir, int threads = 1);

struct GeneralizationPair {
    double mean_a = 0.0, max_a = 0.0, fraction_a = 0.0;
    double mean_b = 0.0, max_b = 0.0, fraction_b = 0.0;
    bool ordering_ok = false;  // mean_b >= mean_a
};

struct GeneralizationReport {
    std::vector<GeneralizationPair> pairs;
    int ordering_majority = 0;
    double worst_max_b = 0.0;
    bool passed = false;
};

GeneralizationReport run_generalization(std::uint64_t seed, const std::filesystem::path& out_dir,
                                        int pairs = 5, int threads = 1);

struct DiscriminationReport {
    int field_attempts = 0;
    double expert_differ_fraction = 0.0;
    double synth_differ_fraction = 0.0;
    double centroid_separation = 0.0;       // along the first principal component
    double pooled_within_class_std = 0.0;   // same axis
    std::vector<double> explained_variance;
    double fraction_converged_a = 0.0;
    double fraction_converged_b = 0.0;
    bool passed = false;
};

DiscriminationReport run_discrimination(std::uint64_t seed, const std::filesystem::path& out_dir,
                                        int threads = 1);

// Writes config.json, history.csv, weights.json, model.json and manifest.json
// into run_dir and returns the training result. field_path/dataset_path are
// the already-written inputs; they are hashed into the manifest and recorded
// relative to run_dir where possible.
irl::TrainingResult train_to_dir(const fieldgen::ThreatField& field,
                                 const oracle::PathDataset& dataset, const irl::IRLConfig& irl_cfg,
                                 const dql::DQLConfig& dql_cfg, std::uint64_t seed,
                                 const std::filesystem::path& run_dir,
                                 const std::filesystem::path& field_path,
                                 const std::filesystem::path& dataset_path,
                                 const std::function<void(const irl::IterationRecord&)>& on_iteration = {});

// error_map.csv plus summary.json under out_dir.
void write_error_map(const std::filesystem::path& out_dir, const eval::ErrorMap& map);

void write_pca_csv(const std::filesystem::path& path, const eval::PCAResult& pca);

}  // namespace minexp::cli
