#include "bless/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "bless/em.hpp"
#include "bless/model.hpp"
#include "bless/random.hpp"
#include "bless/simulation.hpp"
#include "parallel.hpp"

namespace bless {
namespace {

std::string pattern_label(std::size_t pattern, int latents) {
  std::string label;
  for (int k = 0; k < latents; ++k) label.push_back('0' + latent_bit(pattern, k, latents));
  return label;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.precision(17);
  return out;
}

void write_params(std::ostream& out, int member, const BlessModel& m) {
  for (int j = 0; j < m.p(); ++j) {
    for (int c = 0; c < m.d; ++c) {
      out << member << ",theta0_" << j + 1 << "_" << c + 1 << ',' << m.items[j].theta0(c) << '\n';
      out << member << ",theta1_" << j + 1 << "_" << c + 1 << ',' << m.items[j].theta1(c) << '\n';
    }
  }
  for (std::size_t l = 0; l < num_patterns(m.k()); ++l) {
    out << member << ",nu_" << pattern_label(l, m.k()) << ','
        << m.nu(static_cast<Eigen::Index>(l)) << '\n';
  }
}

Json family_summary(const BlessModel& truth, const AlternativeFamily& family) {
  Json out = to_json(family);
  out.erase("members");
  out["source"] = model_to_json(truth);
  out["retained"] = family.members.size();
  Json members = Json::array();
  for (const AlternativeMember& m : family.members) {
    members.push_back({{"perturbation", m.perturbation},
                       {"pmf_deviation", m.pmf_deviation},
                       {"parameter_change", m.parameter_change}});
  }
  out["members"] = std::move(members);
  return out;
}

}  // namespace

GraphicalMatrix single_child_graph() {
  return GraphicalMatrix::from_parents({0, 1, 2, 1, 2}, 3);
}

Prop1FigureResult run_prop1_figure(const Prop1FigureConfig& config) {
  SimConfig sim;
  sim.p = 5;
  sim.k = 3;
  sim.d = 2;
  sim.seed = config.seed;
  sim.theta_gap_min = 0.3;
  sim.nu_floor = 0.05;
  Prop1FigureResult result;
  result.truth = random_model(sim, single_child_graph());
  result.family =
      construct_prop1_alternatives(result.truth, 0, config.count, config.radius);
  return result;
}

Vector push_off_surface(const Vector& nu, int k, double tv) {
  Eigen::Index source = 0;
  nu.maxCoeff(&source);
  if (nu(source) <= tv) {
    throw std::invalid_argument("no entry of nu can give up the requested mass");
  }
  Vector best = nu;
  double best_measure = -1.0;
  for (Eigen::Index target = 0; target < nu.size(); ++target) {
    if (target == source) continue;
    Vector moved = nu;
    moved(source) -= tv;
    moved(target) += tv;
    const double measure = latent_independence_check(moved, k).measure;
    if (measure > best_measure) {
      best_measure = measure;
      best = moved;
    }
  }
  return best;
}

SurfaceNonidResult run_surface_nonid(const SurfaceNonidConfig& config) {
  SimConfig sim;
  sim.p = 6;
  sim.k = 3;
  sim.d = config.d;
  sim.seed = config.seed;
  sim.theta_gap_min = 0.3;
  sim.nu_floor = 0.02;
  SurfaceNonidResult result;
  result.truth = random_model_on_independence_surface(
      sim, GraphicalMatrix::identity_stack(3, 2), 0);
  result.family = construct_thm2b_alternatives(result.truth, 0, config.count,
                                               config.radius, config.seed);

  result.off_surface_nu = push_off_surface(result.truth.nu, 0, config.off_surface_tv);
  result.off_surface_measure =
      latent_independence_check(result.off_surface_nu, 0).measure;
  BlessModel off = result.truth;
  off.nu = result.off_surface_nu;
  try {
    construct_thm2b_alternatives(off, 0, 1, config.radius, config.seed);
  } catch (const PreconditionError& e) {
    result.off_surface_refused = true;
    result.refusal_message = e.what();
  }
  return result;
}

double distance_to_surface(const Vector& nu) {
  if (nu.size() == 4) return std::abs(k2_dependence_determinant(nu));
  int latents = 0;
  while ((Eigen::Index{1} << latents) < nu.size()) ++latents;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < latents; ++k) {
    best = std::min(best, latent_independence_check(nu, k).measure);
  }
  return best;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

BlessingMseResult run_blessing_mse(const BlessingMseConfig& config) {
  if (config.models < 2 || config.datasets < 1 || config.n < 1) {
    throw std::invalid_argument("blessing-mse needs models >= 2, datasets >= 1, n >= 1");
  }
  if (!(config.top_fraction > 0.0 && config.top_fraction < 1.0)) {
    throw std::invalid_argument("top fraction must lie in (0, 1)");
  }
  const GraphicalMatrix g = GraphicalMatrix::identity_stack(config.k, config.copies);
  std::vector<BlessModel> truths;
  for (int m = 0; m < config.models; ++m) {
    SimConfig sim;
    sim.p = g.items();
    sim.k = config.k;
    sim.d = config.d;
    sim.seed = derive_seed(config.seed, 2 * static_cast<std::uint64_t>(m));
    sim.theta_gap_min = config.theta_gap_min;
    sim.nu_floor = config.nu_floor;
    truths.push_back(random_model(sim, g));
  }

  const std::size_t jobs = static_cast<std::size_t>(config.models) * config.datasets;
  std::vector<double> mse(jobs, 0.0);
  std::vector<int> converged(jobs, 0);
  detail::parallel_for(jobs, config.threads, [&](std::size_t job) {
    const int m = static_cast<int>(job / config.datasets);
    const auto l = static_cast<std::uint64_t>(job % config.datasets);
    const std::uint64_t stream = derive_seed(config.seed, 2 * static_cast<std::uint64_t>(m) + 1);
    const SampledData sample =
        sample_dataset(truths[m], config.n, derive_seed(stream, 2 * l));
    EmConfig em;
    em.restarts = config.restarts;
    em.max_iters = config.max_iters;
    em.tol = config.tol;
    em.seed = derive_seed(stream, 2 * l + 1);
    const EmResult fit = fit_known_g(sample.data, g, config.d, em);
    const Alignment aligned = align_to_truth(fit.model, truths[m]);
    mse[job] = parameter_mse(aligned.aligned, truths[m]);
    converged[job] = fit.converged ? 1 : 0;
  });

  BlessingMseResult result;
  for (int m = 0; m < config.models; ++m) {
    BlessingMseRow row;
    row.model = m;
    row.nu = truths[m].nu;
    row.distance = distance_to_surface(row.nu);
    double total = 0.0;
    for (int l = 0; l < config.datasets; ++l) {
      const std::size_t job = static_cast<std::size_t>(m) * config.datasets + l;
      total += mse[job];
      row.nonconverged += 1 - converged[job];
    }
    row.mse = total / config.datasets;
    result.rows.push_back(std::move(row));
  }

  std::vector<int> order(result.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return result.rows[a].mse > result.rows[b].mse;
  });
  result.top_count = std::clamp(
      static_cast<int>(std::lround(config.top_fraction * config.models)), 1,
      config.models - 1);
  std::vector<double> top;
  std::vector<double> rest;
  for (int i = 0; i < config.models; ++i) {
    BlessingMseRow& row = result.rows[order[i]];
    row.top = i < result.top_count;
    (row.top ? top : rest).push_back(row.distance);
  }
  result.median_distance_top = median(top);
  result.median_distance_rest = median(rest);
  result.test = mann_whitney_less(top, rest);
  return result;
}

Json to_json(const Prop1FigureResult& result) {
  Json out = family_summary(result.truth, result.family);
  out["experiment"] = "prop1-figure";
  return out;
}

Json to_json(const SurfaceNonidResult& result) {
  Json out = family_summary(result.truth, result.family);
  out["experiment"] = "surface-nonid";
  out["source_measure"] = latent_independence_check(result.truth.nu, 0).measure;
  Json off;
  Json nu = Json::array();
  for (Eigen::Index i = 0; i < result.off_surface_nu.size(); ++i) {
    nu.push_back(result.off_surface_nu(i));
  }
  off["nu"] = std::move(nu);
  off["measure"] = result.off_surface_measure;
  off["refused"] = result.off_surface_refused;
  off["message"] = result.refusal_message;
  out["off_surface"] = std::move(off);
  return out;
}

Json to_json(const BlessingMseResult& result, const BlessingMseConfig& config) {
  Json out;
  out["experiment"] = "blessing-mse";
  out["models"] = config.models;
  out["datasets"] = config.datasets;
  out["n"] = config.n;
  out["k"] = config.k;
  out["d"] = config.d;
  out["copies"] = config.copies;
  out["restarts"] = config.restarts;
  out["seed"] = config.seed;
  out["top_fraction"] = config.top_fraction;
  out["top_count"] = result.top_count;
  out["median_distance_top"] = result.median_distance_top;
  out["median_distance_rest"] = result.median_distance_rest;
  out["mann_whitney_u"] = result.test.u;
  out["mann_whitney_p"] = result.test.p_value;
  out["mann_whitney_exact"] = result.test.exact;
  Json rows = Json::array();
  for (const BlessingMseRow& row : result.rows) {
    Json nu = Json::array();
    for (Eigen::Index i = 0; i < row.nu.size(); ++i) nu.push_back(row.nu(i));
    rows.push_back({{"model", row.model + 1},
                    {"nu", std::move(nu)},
                    {"distance", row.distance},
                    {"mse", row.mse},
                    {"nonconverged", row.nonconverged},
                    {"top", row.top}});
  }
  out["rows"] = std::move(rows);
  return out;
}

std::vector<std::filesystem::path> write_family_csv(
    const std::filesystem::path& dir, const std::string& prefix,
    const BlessModel& truth, const AlternativeFamily& family) {
  const std::filesystem::path pmf_path = dir / (prefix + "_pmf.csv");
  const std::filesystem::path param_path = dir / (prefix + "_params.csv");
  {
    std::ofstream out = open_csv(pmf_path);
    out << "member,pattern,probability\n";
    const auto emit = [&](int member, const BlessModel& m) {
      const Vector pmf = response_pmf_direct(m);
      for (Eigen::Index c = 0; c < pmf.size(); ++c) {
        out << member << ',' << c << ',' << pmf(c) << '\n';
      }
    };
    emit(0, truth);
    for (std::size_t i = 0; i < family.members.size(); ++i) {
      emit(static_cast<int>(i) + 1, family.members[i].model);
    }
  }
  {
    std::ofstream out = open_csv(param_path);
    out << "member,parameter,value\n";
    write_params(out, 0, truth);
    for (std::size_t i = 0; i < family.members.size(); ++i) {
      write_params(out, static_cast<int>(i) + 1, family.members[i].model);
    }
  }
  return {pmf_path, param_path};
}

std::vector<std::filesystem::path> write_blessing_csv(
    const std::filesystem::path& dir, const BlessingMseResult& result) {
  const std::filesystem::path path = dir / "blessing_mse.csv";
  std::ofstream out = open_csv(path);
  if (result.rows.empty()) return {path};
  const int latents = static_cast<int>(std::log2(result.rows.front().nu.size()));
  out << "model";
  for (std::size_t l = 0; l < num_patterns(latents); ++l) {
    out << ",nu_" << pattern_label(l, latents);
  }
  out << ",distance,mse,nonconverged,top\n";
  for (const BlessingMseRow& row : result.rows) {
    out << row.model + 1;
    for (Eigen::Index i = 0; i < row.nu.size(); ++i) out << ',' << row.nu(i);
    out << ',' << row.distance << ',' << row.mse << ',' << row.nonconverged << ','
        << (row.top ? 1 : 0) << '\n';
  }
  return {path};
}

}  // namespace bless
