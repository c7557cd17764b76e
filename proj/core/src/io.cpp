#include "bless/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bless/model.hpp"
#include "bless/random.hpp"

namespace bless {
namespace {

template <typename T>
T required(const Json& json, const char* key) {
  if (!json.is_object() || !json.contains(key)) {
    throw DataError(std::string("missing field \"") + key + "\"");
  }
  try {
    return json.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("field \"") + key + "\": " + e.what());
  }
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r)));
  return out;
}

Vector to_vector(const std::vector<double>& values) {
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json one_based(const std::vector<int>& indices) {
  Json out = Json::array();
  for (int i : indices) out.push_back(i + 1);
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
  }
  return fields;
}

}  // namespace

Json graph_to_json(const GraphicalMatrix& g) {
  Json out = Json::array();
  for (int j = 0; j < g.items(); ++j) {
    Json row = Json::array();
    for (int k = 0; k < g.latents(); ++k) row.push_back(g(j, k));
    out.push_back(std::move(row));
  }
  return out;
}

GraphicalMatrix graph_from_json(const Json& json) {
  if (json.is_object() && !json.contains("g")) throw DataError("missing field \"g\"");
  const Json& rows = json.is_object() ? json.at("g") : json;
  std::vector<std::vector<int>> entries;
  try {
    entries = rows.get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("G must be a matrix of 0/1 integers: ") + e.what());
  }
  if (entries.empty() || entries.front().empty()) throw DataError("G is empty");
  for (const auto& row : entries) {
    if (row.size() != entries.front().size()) throw DataError("G rows differ in length");
    for (int v : row) {
      if (v != 0 && v != 1) throw DataError("G entries must be 0 or 1");
    }
  }
  return GraphicalMatrix(entries);
}

GraphicalMatrix read_graph(const std::filesystem::path& path) {
  return graph_from_json(read_json(path));
}

Json model_to_json(const BlessModel& model) {
  Json out;
  out["p"] = model.p();
  out["k"] = model.k();
  out["d"] = model.d;
  out["g"] = graph_to_json(model.g);
  Json theta0 = Json::array();
  Json theta1 = Json::array();
  for (const ItemCpt& item : model.items) {
    theta0.push_back(vector_json(item.theta0));
    theta1.push_back(vector_json(item.theta1));
  }
  out["theta0"] = std::move(theta0);
  out["theta1"] = std::move(theta1);
  out["nu"] = vector_json(model.nu);
  return out;
}

BlessModel model_from_json(const Json& json) {
  const int p = required<int>(json, "p");
  const int k = required<int>(json, "k");
  const int d = required<int>(json, "d");
  if (p < 1 || k < 1 || k > 30 || d < 2) {
    throw DataError("model needs p >= 1, 1 <= k <= 30 and d >= 2");
  }
  BlessModel model;
  model.d = d;
  model.g = graph_from_json(json);
  if (model.g.items() != p || model.g.latents() != k) {
    throw DataError("G shape differs from (p, k)");
  }
  const auto theta0 = required<std::vector<std::vector<double>>>(json, "theta0");
  const auto theta1 = required<std::vector<std::vector<double>>>(json, "theta1");
  const auto nu = required<std::vector<double>>(json, "nu");
  if (static_cast<int>(theta0.size()) != p || static_cast<int>(theta1.size()) != p) {
    throw DataError("theta0/theta1 need one row per item");
  }
  for (int j = 0; j < p; ++j) {
    if (static_cast<int>(theta0[j].size()) != d || static_cast<int>(theta1[j].size()) != d) {
      throw DataError("theta rows need d entries (item " + std::to_string(j + 1) + ")");
    }
    model.items.push_back({to_vector(theta0[j]), to_vector(theta1[j])});
  }
  if (nu.size() != num_patterns(k)) throw DataError("nu needs 2^k entries");
  model.nu = to_vector(nu);
  if (const ValidationReport report = validate_model(model); !report.empty()) {
    throw DataError("invalid model: " + report.front());
  }
  return model;
}

BlessModel read_model(const std::filesystem::path& path) {
  return model_from_json(read_json(path));
}

void write_model(const std::filesystem::path& path, const BlessModel& model) {
  write_json(path, model_to_json(model));
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (int j = 0; j < data.items(); ++j) out << (j ? ",y" : "y") << j + 1;
  out << '\n';
  std::string line;
  for (int i = 0; i < data.subjects(); ++i) {
    line.clear();
    for (int j = 0; j < data.items(); ++j) {
      if (j) line.push_back(',');
      line += std::to_string(data(i, j) + 1);
    }
    line.push_back('\n');
    out << line;
  }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out = open_output(path);
  write_dataset_csv(out, data);
}

Dataset read_dataset_csv(std::istream& in, std::optional<int> categories) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  const int p = static_cast<int>(header.size());
  for (int j = 0; j < p; ++j) {
    if (header[j] != "y" + std::to_string(j + 1)) {
      throw DataError("CSV header must be y1..yp, got \"" + std::string(header[j]) + "\"");
    }
  }
  std::vector<std::uint16_t> cells;
  int observed_max = 0;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (static_cast<int>(fields.size()) != p) {
      throw DataError("line " + std::to_string(row) + ": expected " +
                      std::to_string(p) + " fields");
    }
    for (std::string_view f : fields) {
      int value = 0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc() || ptr != f.data() + f.size() || value < 1 || value > 65535) {
        throw DataError("line " + std::to_string(row) + ": bad category \"" +
                        std::string(f) + "\"");
      }
      if (categories && value > *categories) {
        throw DataError("line " + std::to_string(row) + ": category " +
                        std::to_string(value) + " exceeds d = " +
                        std::to_string(*categories));
      }
      observed_max = std::max(observed_max, value);
      cells.push_back(static_cast<std::uint16_t>(value - 1));
    }
  }
  const int n = static_cast<int>(cells.size() / static_cast<std::size_t>(p));
  if (n == 0) throw DataError("CSV has no data rows");
  const int d = categories.value_or(std::max(observed_max, 2));
  Dataset data(n, p, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      data.set(i, j, cells[static_cast<std::size_t>(i) * p + j]);
    }
  }
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path,
                         std::optional<int> categories) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_dataset_csv(in, categories);
}

std::string model_hash(const BlessModel& model) {
  const std::string text = model_to_json(model).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

Json to_json(const DatasetMetadata& meta) {
  Json out;
  out["seed"] = meta.seed;
  out["model_hash"] = meta.model_hash;
  out["n"] = meta.n;
  out["rng_algorithm"] = meta.rng_algorithm;
  return out;
}

Json to_json(const EmResult& result) {
  Json out;
  out["model"] = model_to_json(result.model);
  out["loglik"] = result.loglik;
  out["loglik_trace"] = result.loglik_trace;
  out["converged"] = result.converged;
  out["iterations"] = result.iterations;
  out["g_estimated"] = result.g_estimated;
  if (result.g_estimated) {
    out["gamma_tie"] = result.gamma_tie;
    out["gamma"] = matrix_json(result.gamma);
    out["refine_moves"] = result.refine_moves;
  }
  out["zero_denominator"] = result.zero_denominator;
  out["restarts"] = result.restarts;
  out["best_restart"] = result.best_restart;
  out["seed"] = result.seed;
  out["wall_seconds"] = result.wall_seconds;
  return out;
}

Json to_json(const TestReport& report) {
  Json out;
  out["group_a"] = one_based(report.group_a);
  out["group_b"] = one_based(report.group_b);
  out["statistic"] = report.statistic;
  out["df"] = report.df;
  out["p_value"] = report.p_value;
  out["level"] = report.level;
  out["reject"] = report.reject;
  if (!report.warning.empty()) out["warning"] = report.warning;
  return out;
}

Json to_json(const IdentifiabilityTestResult& result) {
  Json out;
  out["latents"] = one_based(result.latents);
  out["alpha"] = result.alpha;
  out["bonferroni"] = result.bonferroni;
  out["per_test_level"] = result.per_test_level;
  out["evidence"] = result.evidence;
  Json per_latent = Json::array();
  for (std::size_t i = 0; i < result.latents.size(); ++i) {
    per_latent.push_back({{"latent", result.latents[i] + 1},
                          {"evidence", static_cast<bool>(result.latent_evidence[i])}});
  }
  out["latent_evidence"] = std::move(per_latent);
  Json tests = Json::array();
  for (std::size_t t = 0; t < result.tests.size(); ++t) {
    Json test = to_json(result.tests[t]);
    test["latent"] = result.test_latent[t] + 1;
    tests.push_back(std::move(test));
  }
  out["tests"] = std::move(tests);
  if (!result.note.empty()) out["note"] = result.note;
  return out;
}

Json to_json(const AlternativeFamily& family) {
  Json out;
  const bool prop1 = family.tag == ConstructionTag::kProp1;
  out["mode"] = prop1 ? "prop1" : "thm2b";
  out[prop1 ? "item" : "latent"] = family.target + 1;
  out["max_pmf_deviation"] = family.max_pmf_deviation;
  if (!prop1) out["closed_form_gap"] = family.closed_form_gap;
  Json members = Json::array();
  for (const AlternativeMember& m : family.members) {
    members.push_back({{"perturbation", m.perturbation},
                       {"pmf_deviation", m.pmf_deviation},
                       {"parameter_change", m.parameter_change},
                       {"model", model_to_json(m.model)}});
  }
  out["members"] = std::move(members);
  out["skipped"] = family.skipped;
  return out;
}

Json to_json(const GraphClassification& classification) {
  Json out;
  Json latents = Json::array();
  for (std::size_t k = 0; k < classification.verdicts.size(); ++k) {
    latents.push_back({{"latent", static_cast<int>(k) + 1},
                       {"children", classification.child_counts[k]},
                       {"verdict", std::string(to_string(classification.verdicts[k]))}});
  }
  out["latents"] = std::move(latents);
  out["overall"] = std::string(to_string(classification.overall));
  out["generic"] = classification.generic();
  return out;
}

Json to_json(const KruskalReport& report) {
  Json out;
  out["latent"] = report.latent + 1;
  Json groups = Json::array();
  for (const RankGroup& g : report.groups) {
    groups.push_back({{"items", one_based(g.items)},
                      {"singular_ratio", g.singular_ratio},
                      {"rank", g.rank}});
  }
  out["groups"] = std::move(groups);
  out["full_rank"] = report.full_rank;
  return out;
}

Json to_json(const RunManifest& manifest) {
  Json out;
  out["subcommand"] = manifest.subcommand;
  out["arguments"] = manifest.arguments;
  out["seed"] = manifest.seed ? Json(*manifest.seed) : Json(nullptr);
  out["inputs"] = manifest.inputs;
  out["outputs"] = manifest.outputs;
  out["wall_seconds"] = manifest.wall_seconds;
  out["tool_version"] = manifest.tool_version;
  out["rng_algorithm"] = std::string(Rng::kAlgorithm);
  return out;
}

void write_json(const std::filesystem::path& path, const Json& json) {
  std::ofstream out = open_output(path);
  out << json.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace bless
