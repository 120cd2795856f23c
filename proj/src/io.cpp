#include "minexp/io.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace minexp::io {

using nlohmann::json;

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw input_error("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw input_error("malformed JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

void check_format_version(const json& j, int supported, const std::string& what) {
    if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
        throw input_error(what + ": missing format_version");
    }
    const int version = j["format_version"].get<int>();
    if (version != supported) {
        throw input_error(what + ": unsupported format_version " + std::to_string(version) +
                          " (supported: " + std::to_string(supported) + ")");
    }
}

json grid_to_json(const fieldgen::GridSpec& grid) {
    return json{{"rows", grid.rows},
                {"cols", grid.cols},
                {"extent_min", grid.extent_min},
                {"extent_max", grid.extent_max},
                {"n_time_steps", grid.n_time_steps},
                {"dt", grid.dt}};
}

fieldgen::GridSpec grid_from_json(const json& j) {
    fieldgen::GridSpec grid;
    try {
        grid.rows = j.at("rows").get<int>();
        grid.cols = j.at("cols").get<int>();
        grid.extent_min = j.at("extent_min").get<std::array<double, 2>>();
        grid.extent_max = j.at("extent_max").get<std::array<double, 2>>();
        grid.n_time_steps = j.at("n_time_steps").get<int>();
        grid.dt = j.at("dt").get<double>();
    } catch (const json::exception& e) {
        throw input_error(std::string("malformed grid spec: ") + e.what());
    }
    grid.validate();
    return grid;
}

namespace {

json rbf_meta_to_json(const fieldgen::RbfMeta& meta) {
    return json{{"offset", meta.offset},       {"centers", meta.centers},
                {"widths", meta.widths},       {"coefficients", meta.coefficients},
                {"seed", meta.seed},           {"attempts", meta.attempts}};
}

fieldgen::RbfMeta rbf_meta_from_json(const json& j) {
    fieldgen::RbfMeta meta;
    meta.offset = j.at("offset").get<double>();
    meta.centers = j.at("centers").get<std::vector<std::array<double, 2>>>();
    meta.widths = j.at("widths").get<std::vector<double>>();
    meta.coefficients = j.at("coefficients").get<std::vector<double>>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.attempts = j.at("attempts").get<int>();
    return meta;
}

json state_to_json(const mdp::State& s) { return json{{"cell", s.cell}, {"t", s.t}}; }

mdp::State state_from_json(const json& j) {
    return mdp::State{j.at("cell").get<int>(), j.at("t").get<int>()};
}

}  // namespace

void save_field(const std::filesystem::path& path, const fieldgen::ThreatField& field) {
    field.validate();
    const int n = field.grid.n_cells();
    json slices = json::array();
    for (int t = 0; t < field.grid.n_time_steps; ++t) {
        json slice = json::array();
        for (int cell = 0; cell < n; ++cell) {
            slice.push_back(field.values[static_cast<std::size_t>(t) * n + cell]);
        }
        slices.push_back(std::move(slice));
    }
    json meta = json::array();
    for (const auto& m : field.rbf_meta) meta.push_back(rbf_meta_to_json(m));
    json j{{"format_version", kFieldFormatVersion},
           {"grid", grid_to_json(field.grid)},
           {"values", std::move(slices)},
           {"rbf_meta", std::move(meta)}};
    if (!field.rbf_meta.empty()) j["seed"] = field.rbf_meta.front().seed;
    write_json(path, j);
}

fieldgen::ThreatField load_field(const std::filesystem::path& path) {
    const json j = read_json(path);
    check_format_version(j, kFieldFormatVersion, "field file");
    fieldgen::ThreatField field;
    field.grid = grid_from_json(j.at("grid"));
    const auto& slices = j.at("values");
    if (!slices.is_array() || static_cast<int>(slices.size()) != field.grid.n_time_steps) {
        throw input_error("field file: slice count does not match n_time_steps");
    }
    field.values.reserve(static_cast<std::size_t>(field.grid.n_cells()) *
                         field.grid.n_time_steps);
    for (const auto& slice : slices) {
        if (static_cast<int>(slice.size()) != field.grid.n_cells()) {
            throw input_error("field file: slice length does not match the grid");
        }
        for (const auto& v : slice) field.values.push_back(v.get<double>());
    }
    if (j.contains("rbf_meta")) {
        for (const auto& m : j["rbf_meta"]) field.rbf_meta.push_back(rbf_meta_from_json(m));
    }
    field.validate();
    return field;
}

void save_dataset(const std::filesystem::path& path, const oracle::PathDataset& dataset,
                  const std::string& header_model_ref, const std::string& header_field_ref) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path.string());
    if (!header_model_ref.empty()) {
        json header{{"header", true},
                    {"format_version", kDatasetFormatVersion},
                    {"model_ref", header_model_ref},
                    {"field_ref", header_field_ref},
                    {"cost_variant", oracle::cost_variant_name(dataset.cost_variant)},
                    {"feature_variant", mdp::feature_variant_name(dataset.feature_variant)}};
        out << header.dump() << '\n';
    }
    for (const oracle::Path& p : dataset.paths) {
        json states = json::array();
        for (const mdp::State& s : p.states) states.push_back(state_to_json(s));
        json line{{"start", state_to_json(p.states.front())},
                  {"states", std::move(states)},
                  {"cost", p.cost},
                  {"phi", p.phi},
                  {"reached_goal", p.reached_goal}};
        out << line.dump() << '\n';
    }
    if (!out) throw input_error("write failed: " + path.string());
}

oracle::PathDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open: " + path.string());
    oracle::PathDataset dataset;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw input_error("malformed dataset line in " + path.string() + ": " + e.what());
        }
        if (first && j.contains("header")) {
            check_format_version(j, kDatasetFormatVersion, "dataset header");
            if (j.contains("cost_variant")) {
                dataset.cost_variant =
                    oracle::cost_variant_from_name(j["cost_variant"].get<std::string>());
            }
            if (j.contains("field_ref")) dataset.field_ref = j["field_ref"].get<std::string>();
            first = false;
            continue;
        }
        first = false;
        oracle::Path p;
        for (const auto& s : j.at("states")) p.states.push_back(state_from_json(s));
        if (p.states.empty()) throw input_error("dataset path with no states");
        p.cost = j.at("cost").get<double>();
        p.phi = j.at("phi").get<std::vector<double>>();
        p.reached_goal = j.at("reached_goal").get<bool>();
        dataset.paths.push_back(std::move(p));
    }
    if (dataset.paths.empty()) throw input_error("dataset file has no paths: " + path.string());
    const std::size_t phi_len = dataset.paths.front().phi.size();
    for (const oracle::Path& p : dataset.paths) {
        if (p.phi.size() != phi_len) throw input_error("dataset paths disagree on phi length");
    }
    if (phi_len == 2) {
        dataset.feature_variant = mdp::FeatureVariant::Standard;
    } else if (phi_len == 3) {
        dataset.feature_variant = mdp::FeatureVariant::SplitDistance;
    } else {
        throw input_error("dataset phi length must be 2 or 3");
    }
    return dataset;
}

namespace {

json mlp_to_json(const dql::Mlp& net) {
    json layers = json::array();
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const auto& w = net.weights[l];
        std::vector<double> flat(w.size());
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index k = 0; k < w.cols(); ++k) {
                flat[static_cast<std::size_t>(i) * w.cols() + k] = w(i, k);
            }
        }
        std::vector<double> bias(net.biases[l].data(), net.biases[l].data() + net.biases[l].size());
        layers.push_back(json{{"weights", flat}, {"bias", bias}});
    }
    return layers;
}

dql::Mlp mlp_from_json(const std::vector<int>& sizes, const json& layers) {
    dql::Mlp net = dql::Mlp::zeros(sizes);
    if (layers.size() != net.weights.size()) {
        throw input_error("model file: layer count does not match arch");
    }
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const auto flat = layers[l].at("weights").get<std::vector<double>>();
        const auto bias = layers[l].at("bias").get<std::vector<double>>();
        auto& w = net.weights[l];
        if (flat.size() != static_cast<std::size_t>(w.size()) ||
            bias.size() != static_cast<std::size_t>(net.biases[l].size())) {
            throw input_error("model file: parameter shape mismatch");
        }
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index k = 0; k < w.cols(); ++k) {
                w(i, k) = flat[static_cast<std::size_t>(i) * w.cols() + k];
            }
        }
        for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) net.biases[l](i) = bias[i];
    }
    return net;
}

}  // namespace

void save_model(const std::filesystem::path& path, const dql::QModel& model,
                const std::string& field_ref) {
    json j{{"format_version", kModelFormatVersion},
           {"feature_variant", mdp::feature_variant_name(model.variant)},
           {"dynamic_mode", model.dynamic_mode},
           {"grid", grid_to_json(model.grid)},
           {"goal_cell", model.goal_cell},
           {"field_ref", field_ref},
           {"normalization",
            {{"threat_scale", model.norm.threat_scale},
             {"distance_scale", model.norm.distance_scale}}},
           {"arch", model.theta.layer_sizes},
           {"theta", mlp_to_json(model.theta)},
           {"theta_prime", mlp_to_json(model.theta_prime)},
           {"rng_state", model.rng.state()},
           {"global_iteration", model.global_iteration}};
    write_json(path, j);
}

ModelFile load_model(const std::filesystem::path& path) {
    const json j = read_json(path);
    check_format_version(j, kModelFormatVersion, "model file");
    ModelFile out;
    dql::QModel& model = out.model;
    model.variant = mdp::feature_variant_from_name(j.at("feature_variant").get<std::string>());
    model.dynamic_mode = j.at("dynamic_mode").get<bool>();
    model.grid = grid_from_json(j.at("grid"));
    model.goal_cell = j.at("goal_cell").get<int>();
    if (!model.grid.valid_cell(model.goal_cell)) {
        throw input_error("model file: goal cell outside the grid");
    }
    out.field_ref = j.value("field_ref", "");
    model.norm.threat_scale = j.at("normalization").at("threat_scale").get<double>();
    model.norm.distance_scale = j.at("normalization").at("distance_scale").get<double>();
    const auto sizes = j.at("arch").get<std::vector<int>>();
    if (sizes.empty() || sizes.front() != mdp::feature_length(model.variant) ||
        sizes.back() != mdp::kNumActions) {
        throw input_error("model file: arch does not match the feature variant");
    }
    model.theta = mlp_from_json(sizes, j.at("theta"));
    model.theta_prime = mlp_from_json(sizes, j.at("theta_prime"));
    model.rng.set_state(j.at("rng_state").get<Rng::State>());
    model.global_iteration = j.at("global_iteration").get<std::uint64_t>();
    return out;
}

std::string fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open: " + path.string());
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buffer[65536];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

}  // namespace minexp::io
