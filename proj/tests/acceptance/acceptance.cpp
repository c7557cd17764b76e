// End-to-end checks, one PASS/FAIL line each; exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bless/chi2.hpp"
#include "bless/em.hpp"
#include "bless/experiments.hpp"
#include "bless/identifiability.hpp"
#include "bless/model.hpp"
#include "bless/random.hpp"
#include "bless/simulation.hpp"
#include "bless/tensor.hpp"

namespace {

using namespace bless;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

Matrix random_stochastic(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) m.col(c) = rng.dirichlet_flat(rows);
  return m;
}

std::set<std::vector<int>> partition(const GraphicalMatrix& g) {
  std::set<std::vector<int>> out;
  for (int k = 0; k < g.latents(); ++k) out.insert(g.children(k));
  return out;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), pattern, a, b, c);
  return buffer;
}

Outcome shift_transform_identity() {
  Rng rng(101);
  double worst_identity = 0.0;
  double worst_solve = 0.0;
  bool all_invertible = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(3));
    const int p = 1 + static_cast<int>(rng.below(4));
    std::vector<Matrix> phis;
    std::vector<DeltaVector> deltas;
    for (int j = 0; j < p; ++j) {
      const int d = 2 + static_cast<int>(rng.below(3));
      phis.push_back(random_stochastic(d, 1 << k, rng));
      Vector leading(d - 1);
      for (int i = 0; i < d - 1; ++i) leading(i) = rng.uniform(-0.5, 0.5);
      deltas.push_back(DeltaVector::from_leading(leading));
    }
    worst_identity = std::max(worst_identity, verify_lemma1_identity(phis, deltas));
    const Matrix b = build_lemma1_transform(deltas);
    all_invertible = all_invertible && check_invertible(b).invertible;
    Vector rhs(b.rows());
    for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs(i) = rng.uniform(-1.0, 1.0);
    const Vector x = b.partialPivLu().solve(rhs);
    worst_solve = std::max(worst_solve, (b * x - rhs).cwiseAbs().maxCoeff());
  }
  return {worst_identity < 1e-12 && worst_solve < 1e-10 && all_invertible,
          fmt("identity residual %.2e, solve residual %.2e", worst_identity, worst_solve)};
}

Outcome pmf_routes_agree() {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    SimConfig config;
    config.k = 1 + static_cast<int>(rng.below(3));
    config.p = config.k + static_cast<int>(rng.below(static_cast<std::uint64_t>(7 - config.k)));
    config.d = 2 + static_cast<int>(rng.below(3));
    config.seed = rng.next_u64();
    std::vector<int> parents(static_cast<std::size_t>(config.p));
    for (int j = 0; j < config.p; ++j) {
      parents[j] = j < config.k ? j : static_cast<int>(rng.below(static_cast<std::uint64_t>(config.k)));
    }
    const BlessModel m =
        random_model(config, GraphicalMatrix::from_parents(parents, config.k));
    worst = std::max(worst, (response_pmf_direct(m) - response_pmf_kr(m)).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-12, fmt("max |direct - khatri-rao| %.2e over 1000 models", worst)};
}

Outcome single_child_family() {
  const Prop1FigureResult r = run_prop1_figure({});
  double min_change = 1.0;
  for (const auto& member : r.family.members) {
    min_change = std::min(min_change, member.parameter_change);
  }
  const bool pass = r.family.members.size() == 150 && r.family.max_pmf_deviation < 1e-12 &&
                    min_change > 0.0;
  return {pass, fmt("%.0f members, pmf deviation %.2e, min parameter change %.2e",
                    static_cast<double>(r.family.members.size()), r.family.max_pmf_deviation,
                    min_change)};
}

Outcome two_child_family() {
  const SurfaceNonidResult r = run_surface_nonid({});
  const bool pass = r.family.members.size() == 150 && r.family.max_pmf_deviation < 1e-10 &&
                    r.off_surface_refused;
  return {pass, fmt("%.0f members, pmf deviation %.2e, off-surface refused %.0f",
                    static_cast<double>(r.family.members.size()), r.family.max_pmf_deviation,
                    r.off_surface_refused ? 1.0 : 0.0)};
}

Outcome dependence_lowers_error() {
  BlessingMseConfig config;
  config.models = 30;
  config.datasets = 20;
  config.n = 10000;
  config.k = 2;
  config.d = 3;
  config.copies = 2;
  config.threads = threads();
  const BlessingMseResult r = run_blessing_mse(config);
  const bool pass = r.test.p_value < 0.05 && r.median_distance_top < r.median_distance_rest;
  return {pass, fmt("median distance top %.4f vs rest %.4f, one-sided p = %.2e",
                    r.median_distance_top, r.median_distance_rest, r.test.p_value)};
}

Outcome graph_recovery() {
  const GraphicalMatrix g = GraphicalMatrix::identity_stack(3, 2);
  int recovered = 0;
  for (int s = 0; s < 20; ++s) {
    SimConfig config;
    config.p = 6;
    config.k = 3;
    config.d = 3;
    config.seed = derive_seed(303, static_cast<std::uint64_t>(s));
    const BlessModel truth = random_model(config, g);
    const Dataset data = sample_dataset(truth, 10000, derive_seed(config.seed, 1)).data;
    EmConfig em;
    em.seed = derive_seed(config.seed, 2);
    em.restarts = 10;
    em.max_iters = 500;
    em.threads = threads();
    const EmResult fit = fit_unknown_g(data, 3, 3, em);
    recovered += partition(fit.model.g) == partition(g);
  }
  return {recovered >= 18, fmt("%.0f of 20 seeds recover G", recovered)};
}

Outcome em_ascent_and_consistency() {
  const GraphicalMatrix g = GraphicalMatrix::identity_stack(2, 3);
  const std::vector<int> sizes{1000, 10000, 100000};
  std::vector<double> medians;
  double worst_drop = 0.0;
  for (int n : sizes) {
    std::vector<double> errors;
    for (int s = 0; s < 20; ++s) {
      SimConfig config;
      config.p = 6;
      config.k = 2;
      config.d = 3;
      config.seed = derive_seed(404, static_cast<std::uint64_t>(s));
      const BlessModel truth = random_model(config, g);
      const Dataset data =
          sample_dataset(truth, n, derive_seed(config.seed, static_cast<std::uint64_t>(n))).data;
      EmConfig em;
      em.seed = derive_seed(config.seed, 7);
      em.restarts = 5;
      em.threads = threads();
      const EmResult fit = fit_known_g(data, g, 3, em);
      for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t) {
        worst_drop = std::max(worst_drop, fit.loglik_trace[t - 1] - fit.loglik_trace[t]);
      }
      errors.push_back(parameter_mse(align_to_truth(fit.model, truth).aligned, truth));
    }
    medians.push_back(median(errors));
  }
  const bool pass = worst_drop <= 1e-9 && medians[0] > medians[1] && medians[1] > medians[2];
  return {pass, fmt("largest log-likelihood drop %.2e; median MSE %.2e, %.2e, ", worst_drop,
                    medians[0], medians[1]) +
                    fmt("%.2e", medians[2])};
}

Outcome chi2_calibration() {
  const double q = chi2_survival(16.92, 9);
  const int reps = 1000;
  const int n = 2000;

  int size_rejections = 0;
  for (int r = 0; r < reps; ++r) {
    SimConfig config;
    config.p = 4;
    config.k = 2;
    config.d = 2;
    config.seed = derive_seed(505, static_cast<std::uint64_t>(r));
    const BlessModel m = random_model_on_independence_surface(
        config, GraphicalMatrix::identity_stack(2, 2), 0);
    const Dataset data = sample_dataset(m, n, derive_seed(config.seed, 1)).data;
    size_rejections += identifiability_test(data, m.g, 0, TestStrategy::kFullComplement,
                                            0.05, false)
                           .evidence;
  }

  const auto power_at = [&](int subjects) {
    int rejections = 0;
    for (int r = 0; r < reps; ++r) {
      SimConfig config;
      config.p = 4;
      config.k = 2;
      config.d = 2;
      config.theta_gap_min = 0.3;
      config.seed = derive_seed(606, static_cast<std::uint64_t>(r));
      BlessModel m = random_model(config, GraphicalMatrix::identity_stack(2, 2));
      const double delta = 0.05;  // nu00 nu11 - nu01 nu10 = delta
      m.nu << 0.25 + delta, 0.25 - delta, 0.25 - delta, 0.25 + delta;
      const Dataset data = sample_dataset(m, subjects, derive_seed(config.seed, 1)).data;
      rejections += identifiability_test(data, m.g, 0, TestStrategy::kFullComplement, 0.05,
                                         false)
                        .evidence;
    }
    return rejections / static_cast<double>(reps);
  };
  const double power = power_at(10000);
  const double power_small = power_at(n);
  const double size = size_rejections / static_cast<double>(reps);
  const bool pass = std::abs(q - 0.05) <= 5e-4 && size >= 0.03 && size <= 0.07 && power > 0.9;
  return {pass, fmt("Q(16.92; 9) = %.5f, size %.3f at N=2000, ", q, size) +
                    fmt("power %.3f at N=10000 (%.3f at N=2000)", power, power_small)};
}

Outcome graph_classifier() {
  const GraphicalMatrix example({{1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                 {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  const GraphClassification single = classify_graph(single_child_graph());
  const GraphClassification mixed = classify_graph(example);
  const GraphClassification three = classify_graph(GraphicalMatrix::identity_stack(3, 3));
  const std::vector<LatentVerdict> expected_mixed{LatentVerdict::kStrict,
                                                  LatentVerdict::kGenericBoundary,
                                                  LatentVerdict::kGenericBoundary};
  const bool pass = single.overall == GraphVerdict::kNonIdentifiable &&
                    mixed.overall == GraphVerdict::kGeneric && mixed.verdicts == expected_mixed &&
                    three.overall == GraphVerdict::kStrict;
  std::ostringstream detail;
  detail << to_string(single.overall) << ", " << to_string(mixed.overall) << ", "
         << to_string(three.overall);
  return {pass, detail.str()};
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"shift-transform identity and solves", 30, shift_transform_identity},
      {"pmf direct vs khatri-rao", 30, pmf_routes_agree},
      {"single-child equivalent family", 10, single_child_family},
      {"two-child family on independence surface", 60, two_child_family},
      {"dependence lowers estimation error", 900, dependence_lowers_error},
      {"graph recovery with dependent latents", 600, graph_recovery},
      {"EM ascent and consistency", 600, em_ascent_and_consistency},
      {"chi-square calibration and power", 600, chi2_calibration},
      {"graph classifier", 1, graph_classifier},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto started = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const bool in_time = seconds <= criteria[i].budget_seconds;
    const bool pass = outcome.pass && in_time;
    failures += !pass;
    std::printf("%s %zu %s: %s [%.1f s of %.0f s]\n", pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, outcome.detail.c_str(), seconds, criteria[i].budget_seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
