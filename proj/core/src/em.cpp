#include "bless/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "bless/model.hpp"
#include "bless/random.hpp"
#include "bless/simulation.hpp"
#include "parallel.hpp"

namespace bless {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kDenominatorFloor = 1e-300;
constexpr double kInitGap = 0.05;

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

struct LogTables {
  std::vector<std::vector<double>> log0;  // [j][c]
  std::vector<std::vector<double>> log1;
  std::vector<double> log_nu;
  std::vector<int> parents;
};

LogTables log_tables(const BlessModel& model) {
  LogTables t;
  t.parents = model.g.parents();
  t.log0.resize(model.p());
  t.log1.resize(model.p());
  for (int j = 0; j < model.p(); ++j) {
    for (int c = 0; c < model.d; ++c) {
      t.log0[j].push_back(safe_log(model.items[j].theta0(c)));
      t.log1[j].push_back(safe_log(model.items[j].theta1(c)));
    }
  }
  for (Eigen::Index l = 0; l < model.nu.size(); ++l) {
    t.log_nu.push_back(safe_log(model.nu(l)));
  }
  return t;
}

void check_table(const BlessModel& model, const ResponseTable& table) {
  if (table.items != model.p()) {
    throw std::invalid_argument("data item count differs from model");
  }
  if (table.categories > model.d) {
    throw std::invalid_argument("data has more categories than the model");
  }
}

// Fills `posterior` (rows x 2^K) and returns the weighted log-likelihood.
double e_step_into(const BlessModel& model, const ResponseTable& table,
                   PosteriorMatrix& posterior) {
  check_table(model, table);
  const int p = model.p();
  const int k = model.k();
  const std::size_t patterns = num_patterns(k);
  const LogTables t = log_tables(model);
  posterior.resize(static_cast<Eigen::Index>(table.size()),
                   static_cast<Eigen::Index>(patterns));

  std::vector<double> per_latent(2 * static_cast<std::size_t>(k));
  std::vector<double> scores(patterns);
  long double loglik = 0.0L;
  for (std::size_t r = 0; r < table.size(); ++r) {
    const std::vector<int>& y = table.rows[r];
    std::fill(per_latent.begin(), per_latent.end(), 0.0);
    for (int j = 0; j < p; ++j) {
      per_latent[2 * t.parents[j]] += t.log0[j][y[j]];
      per_latent[2 * t.parents[j] + 1] += t.log1[j][y[j]];
    }
    double best = kNegInf;
    for (std::size_t l = 0; l < patterns; ++l) {
      double s = t.log_nu[l];
      for (int kk = 0; kk < k; ++kk) s += per_latent[2 * kk + latent_bit(l, kk, k)];
      scores[l] = s;
      best = std::max(best, s);
    }
    const auto row = static_cast<Eigen::Index>(r);
    if (best == kNegInf) {
      // zero probability under every pattern
      posterior.row(row).setConstant(1.0 / static_cast<double>(patterns));
      loglik += table.weights[r] > 0.0 ? kNegInf : 0.0;
      continue;
    }
    double total = 0.0;
    for (std::size_t l = 0; l < patterns; ++l) {
      scores[l] = std::exp(scores[l] - best);
      total += scores[l];
    }
    for (std::size_t l = 0; l < patterns; ++l) {
      posterior(row, static_cast<Eigen::Index>(l)) = scores[l] / total;
    }
    loglik += static_cast<long double>(table.weights[r]) *
              (static_cast<long double>(best) + std::log(total));
  }
  return static_cast<double>(loglik);
}

// Posterior mass on alpha_k = 1 for every row and latent.
Matrix latent_mass(const PosteriorMatrix& posterior, int k) {
  Matrix mass = Matrix::Zero(posterior.rows(), k);
  for (Eigen::Index l = 0; l < posterior.cols(); ++l) {
    for (int kk = 0; kk < k; ++kk) {
      if (latent_bit(static_cast<std::size_t>(l), kk, k)) {
        mass.col(kk) += posterior.col(l);
      }
    }
  }
  return mass;
}

std::uint64_t restart_seed(std::uint64_t seed, int restart) {
  return derive_seed(seed, static_cast<std::uint64_t>(restart));
}

BlessModel random_start(const GraphicalMatrix& g, int d, Rng& rng) {
  BlessModel start;
  start.g = g;
  start.d = d;
  for (int j = 0; j < g.items(); ++j) {
    start.items.push_back(random_item(d, kInitGap, rng));
  }
  start.nu = rng.dirichlet_flat(static_cast<int>(num_patterns(g.latents())));
  return start;
}

bool relative_change_below(double current, double previous, double tol) {
  return std::abs(current - previous) / (std::abs(previous) + 1.0) < tol;
}

void check_config(const EmConfig& config) {
  if (!(config.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (config.restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (config.max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
}

void check_dataset(const Dataset& data, int d) {
  if (d < 2) throw std::invalid_argument("d must be >= 2");
  if (data.subjects() < 1) throw std::invalid_argument("empty dataset");
  for (auto cell : data.cells()) {
    if (cell >= d) throw DataError("category exceeds d");
  }
}

// Multinomial split of an integer count over the posterior row.
std::vector<double> sampled_counts(const PosteriorMatrix& posterior,
                                   Eigen::Index row, double weight, Rng& rng) {
  const auto patterns = static_cast<std::size_t>(posterior.cols());
  std::vector<double> counts(patterns, 0.0);
  std::vector<double> probs(patterns);
  for (std::size_t l = 0; l < patterns; ++l) {
    probs[l] = posterior(row, static_cast<Eigen::Index>(l));
  }
  const auto draws = static_cast<long long>(std::llround(weight));
  for (long long n = 0; n < draws; ++n) counts[rng.categorical(probs)] += 1.0;
  return counts;
}

struct ParentScores {
  Matrix gamma;  // p x K
  std::vector<int> parents;
  bool tie = false;
  double row_error = 0.0;
};

ParentScores parent_scores(const BlessModel& model, const ResponseTable& table,
                           const PosteriorMatrix& posterior, bool soft,
                           Rng& rng) {
  const int p = model.p();
  const int k = model.k();
  const LogTables t = log_tables(model);
  Matrix score = Matrix::Zero(p, k);
  std::vector<double> active(k);
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    double total = table.weights[r];
    std::fill(active.begin(), active.end(), 0.0);
    if (soft) {
      for (Eigen::Index l = 0; l < posterior.cols(); ++l) {
        for (int kk = 0; kk < k; ++kk) {
          if (latent_bit(static_cast<std::size_t>(l), kk, k)) {
            active[kk] += table.weights[r] * posterior(row, l);
          }
        }
      }
    } else {
      const std::vector<double> z =
          sampled_counts(posterior, row, table.weights[r], rng);
      total = std::accumulate(z.begin(), z.end(), 0.0);
      for (std::size_t l = 0; l < z.size(); ++l) {
        for (int kk = 0; kk < k; ++kk) {
          if (latent_bit(l, kk, k)) active[kk] += z[l];
        }
      }
    }
    for (int j = 0; j < p; ++j) {
      const int c = table.rows[r][j];
      for (int kk = 0; kk < k; ++kk) {
        const double on = active[kk];
        const double off = std::max(total - on, 0.0);
        if (on > 0.0) score(j, kk) += on * t.log1[j][c];
        if (off > 0.0) score(j, kk) += off * t.log0[j][c];
      }
    }
  }
  ParentScores out;
  out.gamma.resize(p, k);
  out.parents.resize(p);
  for (int j = 0; j < p; ++j) {
    const double best = score.row(j).maxCoeff();
    int arg = -1;
    double total = 0.0;
    for (int kk = 0; kk < k; ++kk) {
      const double g = best == kNegInf ? 1.0 : std::exp(score(j, kk) - best);
      out.gamma(j, kk) = g;
      total += g;
    }
    out.gamma.row(j) /= total;
    const double top = out.gamma.row(j).maxCoeff();
    int ties = 0;
    for (int kk = 0; kk < k; ++kk) {
      if (out.gamma(j, kk) >= top - 1e-12) {
        ++ties;
        if (arg < 0) arg = kk;
      }
    }
    out.tie = out.tie || ties > 1;
    out.parents[j] = arg;
    out.row_error =
        std::max(out.row_error, std::abs(out.gamma.row(j).sum() - 1.0));
  }
  return out;
}

EmResult run_unknown_from(const ResponseTable& table, BlessModel model,
                          const EmConfig& config, Rng& rng) {
  EmResult result;
  result.g_estimated = true;
  PosteriorMatrix posterior;
  bool graph_changed = true;
  for (int it = 0; it <= config.max_iters; ++it) {
    const double ll = e_step_into(model, table, posterior);
    if (!result.loglik_trace.empty() && !graph_changed &&
        relative_change_below(ll, result.loglik_trace.back(), config.tol)) {
      result.loglik_trace.push_back(ll);
      result.converged = true;
      break;
    }
    result.loglik_trace.push_back(ll);
    if (it == config.max_iters) break;

    ParentScores scores =
        parent_scores(model, table, posterior, config.soft_gamma, rng);
    result.gamma_tie = result.gamma_tie || scores.tie;
    result.gamma_row_error = std::max(result.gamma_row_error, scores.row_error);
    const GraphicalMatrix next = GraphicalMatrix::from_parents(scores.parents,
                                                               model.k());
    graph_changed = !(next == model.g);
    model.g = next;
    result.gamma = std::move(scores.gamma);

    MStepUpdate update = m_step(posterior, table, model.g);
    result.zero_denominator = result.zero_denominator || update.zero_denominator;
    model.items = std::move(update.items);
    model.nu = std::move(update.nu);
  }
  result.model = std::move(model);
  result.loglik = result.loglik_trace.back();
  result.iterations = static_cast<int>(result.loglik_trace.size());
  return result;
}

std::size_t argmax_loglik(const std::vector<EmResult>& runs) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].loglik > runs[best].loglik) best = r;
  }
  return best;
}

/// `pick` may modify the runs before choosing one.
template <typename RunOne, typename Pick>
EmResult best_of_restarts(const EmConfig& config, RunOne&& run_one, Pick&& pick) {
  const auto started = std::chrono::steady_clock::now();
  std::vector<EmResult> runs(static_cast<std::size_t>(config.restarts));
  detail::parallel_for(runs.size(), config.threads,
                       [&](std::size_t r) { runs[r] = run_one(static_cast<int>(r)); });
  const std::size_t best = pick(runs);
  EmResult result = std::move(runs[best]);
  for (const auto& run : runs) {
    result.gamma_tie = result.gamma_tie || run.gamma_tie;
    result.gamma_row_error = std::max(result.gamma_row_error, run.gamma_row_error);
  }
  result.model = canonicalize_orientation(result.model);
  result.best_restart = static_cast<int>(best);
  result.restarts = config.restarts;
  result.seed = config.seed;
  result.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  return result;
}

template <typename RunOne>
EmResult best_of_restarts(const EmConfig& config, RunOne&& run_one) {
  return best_of_restarts(config, std::forward<RunOne>(run_one), argmax_loglik);
}

}  // namespace

PosteriorMatrix e_step(const BlessModel& model, const ResponseTable& table) {
  PosteriorMatrix posterior;
  e_step_into(model, table, posterior);
  return posterior;
}

PosteriorMatrix e_step(const BlessModel& model, const Dataset& data) {
  ResponseTable table;
  table.items = data.items();
  table.categories = data.categories();
  table.rows.reserve(static_cast<std::size_t>(data.subjects()));
  for (int i = 0; i < data.subjects(); ++i) {
    std::vector<int> row(data.items());
    for (int j = 0; j < data.items(); ++j) row[j] = data(i, j);
    table.rows.push_back(std::move(row));
  }
  table.weights.assign(table.rows.size(), 1.0);
  return e_step(model, table);
}

MStepUpdate m_step(const PosteriorMatrix& posterior, const ResponseTable& table,
                   const GraphicalMatrix& g) {
  if (posterior.rows() != static_cast<Eigen::Index>(table.size())) {
    throw std::invalid_argument("posterior rows differ from data rows");
  }
  const int p = g.items();
  const int k = g.latents();
  const int d = table.categories;
  if (posterior.cols() != static_cast<Eigen::Index>(num_patterns(k))) {
    throw std::invalid_argument("posterior columns differ from 2^K");
  }
  const std::vector<int> parents = g.parents();
  const Matrix on = latent_mass(posterior, k);

  MStepUpdate update;
  update.items.resize(p);
  for (int j = 0; j < p; ++j) {
    Vector num0 = Vector::Zero(d);
    Vector num1 = Vector::Zero(d);
    double den0 = 0.0;
    double den1 = 0.0;
    for (std::size_t r = 0; r < table.size(); ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      const double w = table.weights[r];
      const double m1 = on(row, parents[j]);
      // complementary mass summed directly, avoiding 1 - m1 cancellation
      double m0 = 0.0;
      for (Eigen::Index l = 0; l < posterior.cols(); ++l) {
        if (!latent_bit(static_cast<std::size_t>(l), parents[j], k)) {
          m0 += posterior(row, l);
        }
      }
      const int c = table.rows[r][j];
      num1(c) += w * m1;
      num0(c) += w * m0;
      den1 += w * m1;
      den0 += w * m0;
    }
    if (den0 < kDenominatorFloor || den1 < kDenominatorFloor) {
      update.zero_denominator = true;
    }
    update.items[j].theta0 = num0 / std::max(den0, kDenominatorFloor);
    update.items[j].theta1 = num1 / std::max(den1, kDenominatorFloor);
  }

  Vector nu = Vector::Zero(posterior.cols());
  for (std::size_t r = 0; r < table.size(); ++r) {
    nu += table.weights[r] * posterior.row(static_cast<Eigen::Index>(r)).transpose();
  }
  update.nu = nu / nu.sum();
  return update;
}

MStepUpdate m_step(const PosteriorMatrix& posterior, const Dataset& data,
                   const GraphicalMatrix& g) {
  ResponseTable table;
  table.items = data.items();
  table.categories = data.categories();
  for (int i = 0; i < data.subjects(); ++i) {
    std::vector<int> row(data.items());
    for (int j = 0; j < data.items(); ++j) row[j] = data(i, j);
    table.rows.push_back(std::move(row));
  }
  table.weights.assign(table.rows.size(), 1.0);
  return m_step(posterior, table, g);
}

double log_likelihood(const BlessModel& model, const ResponseTable& table) {
  PosteriorMatrix posterior;
  return e_step_into(model, table, posterior);
}

double log_likelihood(const BlessModel& model, const Dataset& data) {
  return log_likelihood(model, compress(data));
}

std::vector<int> association_clusters(const ResponseTable& table, int k) {
  if (k < 1) throw std::invalid_argument("K must be >= 1");
  const int p = table.items;
  const int d = table.categories;
  const double total = table.total_weight();
  Matrix info = Matrix::Zero(p, p);
  for (int a = 0; a < p; ++a) {
    for (int b = a + 1; b < p; ++b) {
      Matrix joint = Matrix::Zero(d, d);
      for (std::size_t r = 0; r < table.size(); ++r) {
        joint(table.rows[r][a], table.rows[r][b]) += table.weights[r];
      }
      joint /= total;
      const Vector row = joint.rowwise().sum();
      const Vector col = joint.colwise().sum().transpose();
      double mi = 0.0;
      for (int x = 0; x < d; ++x) {
        for (int y = 0; y < d; ++y) {
          if (joint(x, y) > 0.0) mi += joint(x, y) * std::log(joint(x, y) / (row(x) * col(y)));
        }
      }
      info(a, b) = info(b, a) = mi;
    }
  }
  std::vector<std::vector<int>> clusters;
  for (int j = 0; j < p; ++j) clusters.push_back({j});
  while (static_cast<int>(clusters.size()) > k) {
    std::size_t best_a = 0;
    std::size_t best_b = 1;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double link = 0.0;
        for (int x : clusters[a]) {
          for (int y : clusters[b]) link += info(x, y);
        }
        link /= static_cast<double>(clusters[a].size() * clusters[b].size());
        if (link > best) {
          best = link;
          best_a = a;
          best_b = b;
        }
      }
    }
    clusters[best_a].insert(clusters[best_a].end(), clusters[best_b].begin(),
                            clusters[best_b].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
  }
  std::sort(clusters.begin(), clusters.end(), [](const auto& x, const auto& y) {
    return *std::min_element(x.begin(), x.end()) < *std::min_element(y.begin(), y.end());
  });
  std::vector<int> parents(static_cast<std::size_t>(p));
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (int j : clusters[c]) parents[j] = static_cast<int>(c);
  }
  return parents;
}

EmResult run_em_from(const ResponseTable& table, BlessModel model,
                     const EmConfig& config) {
  EmResult result;
  PosteriorMatrix posterior;
  for (int it = 0; it <= config.max_iters; ++it) {
    const double ll = e_step_into(model, table, posterior);
    const bool done = !result.loglik_trace.empty() &&
                      relative_change_below(ll, result.loglik_trace.back(),
                                            config.tol);
    result.loglik_trace.push_back(ll);
    if (done) {
      result.converged = true;
      break;
    }
    if (it == config.max_iters) break;
    MStepUpdate update = m_step(posterior, table, model.g);
    result.zero_denominator = result.zero_denominator || update.zero_denominator;
    model.items = std::move(update.items);
    model.nu = std::move(update.nu);
  }
  result.model = std::move(model);
  result.loglik = result.loglik_trace.back();
  result.iterations = static_cast<int>(result.loglik_trace.size());
  return result;
}

namespace {

std::vector<std::vector<int>> neighbour_parents(const std::vector<int>& parents, int k) {
  std::vector<std::vector<int>> out;
  const int p = static_cast<int>(parents.size());
  for (int j = 0; j < p; ++j) {
    for (int kk = 0; kk < k; ++kk) {
      if (kk == parents[j]) continue;
      out.push_back(parents);
      out.back()[j] = kk;
    }
  }
  for (int a = 0; a < p; ++a) {
    for (int b = a + 1; b < p; ++b) {
      if (parents[a] == parents[b]) continue;
      out.push_back(parents);
      std::swap(out.back()[a], out.back()[b]);
    }
  }
  return out;
}

constexpr int kRefineCandidates = 3;

void refine_graph(const ResponseTable& table, EmResult& result, const EmConfig& config) {
  EmResult current = run_em_from(table, result.model, config);
  for (;;) {
    const std::vector<int> parents = current.model.g.parents();
    const auto candidates = neighbour_parents(parents, current.model.k());
    std::vector<EmResult> fits(candidates.size());
    detail::parallel_for(fits.size(), config.threads, [&](std::size_t c) {
      BlessModel start = current.model;
      start.g = GraphicalMatrix::from_parents(candidates[c], start.k());
      fits[c] = run_em_from(table, std::move(start), config);
    });
    std::size_t best = fits.size();
    double best_ll = current.loglik + 1e-6 * (std::abs(current.loglik) + 1.0);
    for (std::size_t c = 0; c < fits.size(); ++c) {
      if (fits[c].loglik > best_ll) {
        best_ll = fits[c].loglik;
        best = c;
      }
    }
    if (best == fits.size()) break;
    current = std::move(fits[best]);
    ++result.refine_moves;
  }
  if (result.refine_moves == 0 && current.loglik <= result.loglik) return;
  result.model = std::move(current.model);
  result.loglik = current.loglik;
  result.loglik_trace.insert(result.loglik_trace.end(), current.loglik_trace.begin(),
                             current.loglik_trace.end());
  result.converged = current.converged;
  result.zero_denominator = result.zero_denominator || current.zero_denominator;
  result.iterations = static_cast<int>(result.loglik_trace.size());
}

/// Refines the best few restarts that ended on distinct graphs.
std::size_t refine_and_pick(const ResponseTable& table, std::vector<EmResult>& runs,
                            const EmConfig& config) {
  std::vector<std::size_t> order(runs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return runs[a].loglik > runs[b].loglik;
  });
  std::vector<std::vector<int>> seen;
  for (std::size_t r : order) {
    if (static_cast<int>(seen.size()) == kRefineCandidates) break;
    std::vector<int> parents = runs[r].model.g.parents();
    if (std::find(seen.begin(), seen.end(), parents) != seen.end()) continue;
    seen.push_back(std::move(parents));
    refine_graph(table, runs[r], config);
  }
  return argmax_loglik(runs);
}

}  // namespace

EmResult fit_known_g(const Dataset& data, const GraphicalMatrix& g, int d,
                     const EmConfig& config) {
  check_config(config);
  check_dataset(data, d);
  if (!g.is_star_forest()) {
    throw std::invalid_argument("G is not a star forest: " + g.violations().front());
  }
  if (g.items() != data.items()) {
    throw std::invalid_argument("G rows differ from the data item count");
  }
  ResponseTable table = compress(data);
  table.categories = d;
  return best_of_restarts(config, [&](int r) {
    Rng rng(restart_seed(config.seed, r));
    return run_em_from(table, random_start(g, d, rng), config);
  });
}

EmResult fit_unknown_g(const Dataset& data, int k, int d,
                       const EmConfig& config) {
  check_config(config);
  check_dataset(data, d);
  if (k < 1) throw std::invalid_argument("K must be >= 1");
  ResponseTable table = compress(data);
  table.categories = d;
  const auto run_one = [&](int r) {
    Rng rng(restart_seed(config.seed, r));
    std::vector<int> parents(static_cast<std::size_t>(data.items()));
    if (r == 0 && config.cluster_start) {
      parents = association_clusters(table, k);
    } else {
      for (int& parent : parents) {
        parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
      }
    }
    BlessModel start =
        random_start(GraphicalMatrix::from_parents(parents, k), d, rng);
    return run_unknown_from(table, std::move(start), config, rng);
  };
  if (!config.refine_graph) return best_of_restarts(config, run_one);
  return best_of_restarts(config, run_one, [&](std::vector<EmResult>& runs) {
    return refine_and_pick(table, runs, config);
  });
}

BlessModel canonicalize_orientation(const BlessModel& model) {
  BlessModel out = model;
  for (int kk = 0; kk < model.k(); ++kk) {
    const std::vector<int> kids = out.g.children(kk);
    int reversed = 0;
    for (int j : kids) reversed += out.items[j].theta1(0) < out.items[j].theta0(0);
    if (2 * reversed > static_cast<int>(kids.size())) {
      out = flip_latent_labels(out, kk);
    }
  }
  return out;
}

namespace {

double squared_distance(const BlessModel& a, const BlessModel& b) {
  double total = (a.nu - b.nu).squaredNorm();
  for (int j = 0; j < a.p(); ++j) {
    total += (a.items[j].theta0 - b.items[j].theta0).squaredNorm();
    total += (a.items[j].theta1 - b.items[j].theta1).squaredNorm();
  }
  for (int j = 0; j < a.p(); ++j) {
    for (int kk = 0; kk < a.k(); ++kk) total += a.g(j, kk) != b.g(j, kk);
  }
  return total;
}

// A relabeling of latent k is admissible when the flipped children still
// satisfy theta1 > theta0 (trivially so for a childless latent).
bool flip_admissible(const BlessModel& model, int k) {
  for (int j : model.g.children(k)) {
    ItemCpt flipped{model.items[j].theta1, model.items[j].theta0};
    if (!satisfies_monotonicity(flipped, 0.0)) return false;
  }
  return true;
}

}  // namespace

Alignment align_to_truth(const BlessModel& estimate, const BlessModel& truth) {
  const int k = truth.k();
  if (estimate.k() != k || estimate.p() != truth.p() || estimate.d != truth.d) {
    throw std::invalid_argument("estimate and truth dimensions differ");
  }
  if (k > 8) throw std::invalid_argument("alignment search limited to K <= 8");

  Alignment best;
  best.distance = std::numeric_limits<double>::infinity();
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    const BlessModel permuted = permute_latents(estimate, perm);
    std::vector<int> flippable;
    for (int kk = 0; kk < k; ++kk) {
      if (flip_admissible(permuted, kk)) flippable.push_back(kk);
    }
    const std::size_t subsets = std::size_t{1} << flippable.size();
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      BlessModel candidate = permuted;
      std::vector<bool> flipped(k, false);
      for (std::size_t b = 0; b < flippable.size(); ++b) {
        if (mask & (std::size_t{1} << b)) {
          candidate = flip_latent_labels(candidate, flippable[b]);
          flipped[flippable[b]] = true;
        }
      }
      const double dist = squared_distance(candidate, truth);
      if (dist < best.distance) {
        best.distance = dist;
        best.aligned = std::move(candidate);
        best.permutation = perm;
        best.flipped = std::move(flipped);
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double parameter_mse(const BlessModel& a, const BlessModel& b) {
  if (a.p() != b.p() || a.k() != b.k() || a.d != b.d) {
    throw std::invalid_argument("models differ in dimensions");
  }
  double total = (a.nu - b.nu).squaredNorm();
  std::size_t count = static_cast<std::size_t>(a.nu.size());
  for (int j = 0; j < a.p(); ++j) {
    total += (a.items[j].theta0 - b.items[j].theta0).squaredNorm();
    total += (a.items[j].theta1 - b.items[j].theta1).squaredNorm();
    count += 2 * static_cast<std::size_t>(a.d);
  }
  return total / static_cast<double>(count);
}

}  // namespace bless
