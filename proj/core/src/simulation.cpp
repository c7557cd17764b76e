#include "bless/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "bless/model.hpp"

namespace bless {
namespace {

// Probability mass kept on the baseline category under theta1.
constexpr double kBaselineFloor = 0.02;

void check_config(const SimConfig& config, const GraphicalMatrix& g) {
  if (config.p < 1 || config.k < 1 || config.d < 2) {
    throw std::invalid_argument("need p >= 1, K >= 1, d >= 2");
  }
  if (g.items() != config.p || g.latents() != config.k) {
    throw std::invalid_argument("graphical matrix disagrees with (p, K)");
  }
  if (!g.is_star_forest()) {
    throw std::invalid_argument("graphical matrix is not a star forest: " +
                                g.violations().front());
  }
  if (!(config.theta_gap_min > 0.0)) {
    throw std::invalid_argument("theta_gap_min must be positive");
  }
  if (!(config.nu_floor >= 0.0) ||
      config.nu_floor * static_cast<double>(num_patterns(config.k)) >= 1.0) {
    throw std::invalid_argument("nu_floor * 2^K must be below 1");
  }
  if ((config.d - 1) * config.theta_gap_min + kBaselineFloor >= 1.0) {
    throw std::invalid_argument(
        "theta_gap_min too large for d categories: (d-1)*gap must stay "
        "below 0.98");
  }
}

std::vector<ItemCpt> random_items(const SimConfig& config, Rng& rng) {
  std::vector<ItemCpt> items;
  items.reserve(config.p);
  for (int j = 0; j < config.p; ++j) {
    items.push_back(random_item(config.d, config.theta_gap_min, rng));
  }
  return items;
}

}  // namespace

ItemCpt random_item(int d, double gap_min, Rng& rng) {
  const double reserved = (d - 1) * gap_min + kBaselineFloor;
  if (reserved >= 1.0) throw std::invalid_argument("infeasible theta gap");
  Vector shape = rng.dirichlet_flat(d);
  shape = 0.9 * shape + Vector::Constant(d, 0.1 / d);

  ItemCpt item;
  item.theta0 = (1.0 - reserved) * shape;
  item.theta0(d - 1) += reserved;

  const double budget = item.theta0(d - 1) - reserved;
  const double moved = rng.uniform() * budget;
  const Vector split = d > 2 ? rng.dirichlet_flat(d - 1) : Vector::Ones(1);
  item.theta1 = item.theta0;
  for (int c = 0; c + 1 < d; ++c) {
    item.theta1(c) += gap_min + moved * split(c);
  }
  item.theta1(d - 1) = item.theta0(d - 1) - (d - 1) * gap_min - moved;
  // renormalize away the rounding drift of the construction
  item.theta0 /= item.theta0.sum();
  item.theta1 /= item.theta1.sum();
  return item;
}

BlessModel random_model(const SimConfig& config, const GraphicalMatrix& g) {
  check_config(config, g);
  Rng rng(config.seed);
  BlessModel model;
  model.g = g;
  model.d = config.d;
  model.items = random_items(config, rng);
  const int patterns = static_cast<int>(num_patterns(config.k));
  model.nu = Vector::Constant(patterns, config.nu_floor) +
             (1.0 - patterns * config.nu_floor) * rng.dirichlet_flat(patterns);
  model.nu /= model.nu.sum();
  return model;
}

BlessModel random_model_on_independence_surface(const SimConfig& config,
                                                const GraphicalMatrix& g,
                                                int k) {
  check_config(config, g);
  if (k < 0 || k >= config.k) throw std::out_of_range("latent out of range");
  Rng rng(config.seed);
  BlessModel model;
  model.g = g;
  model.d = config.d;
  model.items = random_items(config, rng);

  const double q1 = rng.uniform(0.25, 0.75);
  const double q[2] = {1.0 - q1, q1};
  const int rest = static_cast<int>(num_patterns(config.k - 1));
  const double rest_floor = config.nu_floor / std::min(q[0], q[1]);
  if (rest_floor * rest >= 1.0) {
    throw std::invalid_argument("nu_floor too large for a factorized nu");
  }
  const Vector others = Vector::Constant(rest, rest_floor) +
                        (1.0 - rest * rest_floor) * rng.dirichlet_flat(rest);
  model.nu.resize(static_cast<Eigen::Index>(num_patterns(config.k)));
  for (int s = 0; s < rest; ++s) {
    for (int a = 0; a < 2; ++a) {
      model.nu(static_cast<Eigen::Index>(insert_latent_bit(s, a, k, config.k))) =
          q[a] * others(s);
    }
  }
  return model;
}

SampledData sample_dataset(const BlessModel& model, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  const int p = model.p();
  const int k = model.k();
  const std::vector<int> parents = model.g.parents();
  Rng rng(seed);
  SampledData out{Dataset(n, p, model.d), std::vector<int>(n)};
  for (int i = 0; i < n; ++i) {
    const int pattern = rng.categorical(model.nu);
    out.patterns[i] = pattern;
    for (int j = 0; j < p; ++j) {
      const ItemCpt& item = model.items[j];
      const Vector& dist =
          latent_bit(pattern, parents[j], k) ? item.theta1 : item.theta0;
      out.data.set(i, j, rng.categorical(dist));
    }
  }
  return out;
}

}  // namespace bless
