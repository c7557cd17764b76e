#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bless/chi2.hpp"
#include "bless/em.hpp"
#include "bless/identifiability.hpp"
#include "bless/types.hpp"

namespace bless {

using Json = nlohmann::ordered_json;

// Model files: {"p","k","d","g","theta0","theta1","nu"}. theta rows are
// items, columns categories 1..d; nu follows the big-endian pattern index
// (alpha_1 most significant, pattern 0 = all latents absent).
Json model_to_json(const BlessModel& model);
/// Throws DataError on missing fields, shape mismatches or an invalid model.
BlessModel model_from_json(const Json& json);
BlessModel read_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const BlessModel& model);

Json graph_to_json(const GraphicalMatrix& g);
/// Accepts either a bare matrix [[0,1],...] or an object with a "g" field.
GraphicalMatrix graph_from_json(const Json& json);
GraphicalMatrix read_graph(const std::filesystem::path& path);

/// Header y1..yp, one subject per line, categories 1..d.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
void write_dataset_csv(std::ostream& out, const Dataset& data);
/// With `categories` unset, d is the largest observed category. Throws
/// DataError on malformed rows or categories outside 1..d.
Dataset read_dataset_csv(const std::filesystem::path& path,
                         std::optional<int> categories = std::nullopt);
Dataset read_dataset_csv(std::istream& in,
                         std::optional<int> categories = std::nullopt);

/// 64-bit FNV-1a of the canonical model JSON, as 16 hex digits.
std::string model_hash(const BlessModel& model);

struct DatasetMetadata {
  std::uint64_t seed = 0;
  std::string model_hash;
  int n = 0;
  std::string rng_algorithm;
};

Json to_json(const DatasetMetadata& meta);
Json to_json(const EmResult& result);
Json to_json(const TestReport& report);
Json to_json(const IdentifiabilityTestResult& result);
Json to_json(const AlternativeFamily& family);
Json to_json(const GraphClassification& classification);
Json to_json(const KruskalReport& report);

struct RunManifest {
  std::string subcommand;
  std::vector<std::string> arguments;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  std::string tool_version;
};

Json to_json(const RunManifest& manifest);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& json);
Json read_json(const std::filesystem::path& path);

}  // namespace bless
