#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "minexp/dql.hpp"
#include "minexp/oracle.hpp"

namespace minexp::io {

inline constexpr int kFieldFormatVersion = 1;
inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;

void save_field(const std::filesystem::path& path, const fieldgen::ThreatField& field);
fieldgen::ThreatField load_field(const std::filesystem::path& path);

// JSONL datasets: one path per line. Synthesized datasets carry a leading
// header line naming the model and field they came from; expert datasets do
// not. Loading accepts either and infers the feature variant from the phi
// length.
void save_dataset(const std::filesystem::path& path, const oracle::PathDataset& dataset,
                  const std::string& header_model_ref = "",
                  const std::string& header_field_ref = "");
oracle::PathDataset load_dataset(const std::filesystem::path& path);

struct ModelFile {
    dql::QModel model;
    std::string field_ref;
};

void save_model(const std::filesystem::path& path, const dql::QModel& model,
                const std::string& field_ref);
ModelFile load_model(const std::filesystem::path& path);

// FNV-1a over the file bytes, as a fixed-width hex string.
std::string fnv1a64_file(const std::filesystem::path& path);

std::string iso8601_now();

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// Rejects payloads whose format_version differs from the supported one.
void check_format_version(const nlohmann::json& j, int supported, const std::string& what);

nlohmann::json grid_to_json(const fieldgen::GridSpec& grid);
fieldgen::GridSpec grid_from_json(const nlohmann::json& j);

}  // namespace minexp::io
