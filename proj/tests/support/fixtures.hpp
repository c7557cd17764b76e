#pragma once

#include <initializer_list>

#include "bless/simulation.hpp"
#include "bless/types.hpp"

namespace fixture {

inline bless::Vector vec(std::initializer_list<double> values) {
  bless::Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

/// Binary item with P(y = 1 | absent) = t0 and P(y = 1 | present) = t1.
inline bless::ItemCpt binary_item(double t0, double t1) {
  return {vec({t0, 1.0 - t0}), vec({t1, 1.0 - t1})};
}

inline bless::BlessModel model(const bless::GraphicalMatrix& g,
                               std::vector<bless::ItemCpt> items,
                               const bless::Vector& nu) {
  bless::BlessModel m;
  m.g = g;
  m.items = std::move(items);
  m.nu = nu;
  m.d = static_cast<int>(m.items.front().theta0.size());
  return m;
}

inline bless::BlessModel random(int p, int k, int d, std::uint64_t seed) {
  bless::SimConfig config;
  config.p = p;
  config.k = k;
  config.d = d;
  config.seed = seed;
  std::vector<int> parents(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) parents[j] = j % k;
  return bless::random_model(config, bless::GraphicalMatrix::from_parents(parents, k));
}

}  // namespace fixture
