#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bless/chi2.hpp"
#include "bless/identifiability.hpp"
#include "bless/io.hpp"
#include "bless/types.hpp"

namespace bless {

/// G = (100; 010; 001; 010; 001): latent 1 has a single child.
GraphicalMatrix single_child_graph();

struct Prop1FigureConfig {
  std::uint64_t seed = 1;
  int count = 150;
  double radius = 0.01;
};

struct Prop1FigureResult {
  BlessModel truth;
  AlternativeFamily family;
};

/// Random binary model on single_child_graph() and its alternatives for item 1.
Prop1FigureResult run_prop1_figure(const Prop1FigureConfig& config);

struct SurfaceNonidConfig {
  std::uint64_t seed = 1;
  int count = 150;
  double radius = 0.01;
  int d = 2;
  /// Total-variation size of the off-surface perturbation of nu.
  double off_surface_tv = 0.05;
};

struct SurfaceNonidResult {
  BlessModel truth;  // K = 3, G = (I_3; I_3), alpha_1 independent of the rest
  AlternativeFamily family;
  Vector off_surface_nu;
  double off_surface_measure = 0.0;
  bool off_surface_refused = false;
  std::string refusal_message;
};

SurfaceNonidResult run_surface_nonid(const SurfaceNonidConfig& config);

/// Moves `tv` probability mass from the largest entry of nu to the pattern
/// that makes latent k most dependent on the others. Total variation of the
/// change is exactly `tv`.
Vector push_off_surface(const Vector& nu, int k, double tv);

struct BlessingMseConfig {
  int models = 10;    // M
  int datasets = 20;  // L
  int n = 10000;
  int k = 2;
  int d = 3;
  int copies = 2;  // G = (I_K; ...; I_K) with this many blocks
  std::uint64_t seed = 1;
  int restarts = 10;
  int max_iters = 2000;
  double tol = 1e-8;
  double top_fraction = 0.2;
  double theta_gap_min = 0.1;
  double nu_floor = 0.01;
  int threads = 1;
};

struct BlessingMseRow {
  int model = 0;
  Vector nu;
  double distance = 0.0;
  double mse = 0.0;
  int nonconverged = 0;
  bool top = false;
};

struct BlessingMseResult {
  std::vector<BlessingMseRow> rows;
  int top_count = 0;
  double median_distance_top = 0.0;
  double median_distance_rest = 0.0;
  MannWhitneyResult test;
};

/// Distance of nu to the nearest independence surface: |nu00 nu11 - nu01 nu10|
/// for K = 2, otherwise the smallest sigma2/sigma1 over latents.
double distance_to_surface(const Vector& nu);

/// Fits M random models x L datasets with the true G and relates each
/// model's aligned MSE (averaged over datasets) to its distance from the
/// independence surface.
BlessingMseResult run_blessing_mse(const BlessingMseConfig& config);

double median(std::vector<double> values);

Json to_json(const Prop1FigureResult& result);
Json to_json(const SurfaceNonidResult& result);
Json to_json(const BlessingMseResult& result, const BlessingMseConfig& config);

/// Long-format CSVs (member 0 is the source model). Each returns the files
/// it wrote.
std::vector<std::filesystem::path> write_family_csv(
    const std::filesystem::path& dir, const std::string& prefix,
    const BlessModel& truth, const AlternativeFamily& family);
std::vector<std::filesystem::path> write_blessing_csv(
    const std::filesystem::path& dir, const BlessingMseResult& result);

}  // namespace bless
