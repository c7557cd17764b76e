#include "bless/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bless/tensor.hpp"

namespace bless {
namespace {

std::string item_label(int j) { return "item " + std::to_string(j + 1); }

void check_simplex(const Vector& v, int d, const std::string& what,
                   ValidationReport& report) {
  if (v.size() != d) {
    report.push_back(what + " has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(d));
    return;
  }
  if (!v.allFinite()) {
    report.push_back(what + " has non-finite entries");
    return;
  }
  if ((v.array() < 0.0).any()) report.push_back(what + " has negative entries");
  if (std::abs(v.sum() - 1.0) > kSimplexTolerance) {
    report.push_back(what + " does not sum to 1");
  }
}

std::size_t checked_cells(int items, int categories) {
  check_enumeration_guard(items, categories);
  std::size_t cells = 1;
  for (int j = 0; j < items; ++j) cells *= static_cast<std::size_t>(categories);
  return cells;
}

}  // namespace

bool satisfies_monotonicity(const ItemCpt& item, double margin) {
  const Eigen::Index d = item.theta0.size();
  for (Eigen::Index c = 0; c + 1 < d; ++c) {
    if (!(item.theta1(c) > item.theta0(c) + margin)) return false;
  }
  return true;
}

ValidationReport validate_model(const BlessModel& model) {
  ValidationReport report = model.g.violations();
  const int p = model.g.items();
  const int k = model.g.latents();
  if (model.d < 2) report.push_back("d must be at least 2");
  if (static_cast<int>(model.items.size()) != p) {
    report.push_back("expected " + std::to_string(p) + " item tables, got " +
                     std::to_string(model.items.size()));
  }
  const int checked = std::min<int>(p, static_cast<int>(model.items.size()));
  for (int j = 0; j < checked; ++j) {
    const ItemCpt& item = model.items[j];
    check_simplex(item.theta0, model.d, item_label(j) + " theta0", report);
    check_simplex(item.theta1, model.d, item_label(j) + " theta1", report);
    if (item.theta0.size() == model.d && item.theta1.size() == model.d &&
        !satisfies_monotonicity(item)) {
      report.push_back(item_label(j) +
                       " violates theta1 > theta0 on a non-baseline category");
    }
  }
  if (k >= 1 && static_cast<std::size_t>(model.nu.size()) != num_patterns(k)) {
    report.push_back("nu has length " + std::to_string(model.nu.size()) +
                     ", expected 2^K = " + std::to_string(num_patterns(k)));
  } else if (model.nu.size() > 0) {
    if (!model.nu.allFinite()) {
      report.push_back("nu has non-finite entries");
    } else {
      if (!(model.nu.array() > 0.0).all()) {
        report.push_back("nu has non-positive entries");
      }
      if (std::abs(model.nu.sum() - 1.0) > kSimplexTolerance) {
        report.push_back("nu does not sum to 1");
      }
    }
  }
  return report;
}

Matrix phi_table(const BlessModel& model, int j) {
  if (j < 0 || j >= model.p()) throw std::out_of_range("item index out of range");
  const int k = model.k();
  const int parent = model.g.parent_of(j);
  const std::size_t patterns = num_patterns(k);
  Matrix table(model.d, static_cast<Eigen::Index>(patterns));
  for (std::size_t l = 0; l < patterns; ++l) {
    table.col(static_cast<Eigen::Index>(l)) = latent_bit(l, parent, k)
                                                  ? model.items[j].theta1
                                                  : model.items[j].theta0;
  }
  return table;
}

void check_enumeration_guard(int items, int categories) {
  if (items * std::log2(static_cast<double>(categories)) >
      kEnumerationLog2Budget + 1e-12) {
    throw SizeGuardError("pmf enumeration needs d^p <= 2^24 cells (p=" +
                         std::to_string(items) +
                         ", d=" + std::to_string(categories) + ")");
  }
}

Vector response_pmf_direct(const BlessModel& model) {
  const int p = model.p();
  const int k = model.k();
  const int d = model.d;
  const std::size_t cells = checked_cells(p, d);
  const std::size_t patterns = num_patterns(k);
  const std::vector<int> parents = model.g.parents();

  Vector probs = Vector::Zero(static_cast<Eigen::Index>(cells));
  std::vector<int> response(p, 0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    double total = 0.0;
    for (std::size_t l = 0; l < patterns; ++l) {
      double term = model.nu(static_cast<Eigen::Index>(l));
      for (int j = 0; j < p; ++j) {
        const ItemCpt& item = model.items[j];
        term *= latent_bit(l, parents[j], k) ? item.theta1(response[j])
                                             : item.theta0(response[j]);
      }
      total += term;
    }
    probs(static_cast<Eigen::Index>(cell)) = total;
    // odometer increment, last item fastest
    for (int j = p - 1; j >= 0; --j) {
      if (++response[j] < d) break;
      response[j] = 0;
    }
  }
  return probs;
}

Vector response_pmf_kr(const BlessModel& model) {
  checked_cells(model.p(), model.d);
  std::vector<int> all(model.p());
  for (int j = 0; j < model.p(); ++j) all[j] = j;
  return marginal_pmf(model, all);
}

Vector marginal_pmf(const BlessModel& model, const std::vector<int>& subset) {
  if (subset.empty()) throw std::invalid_argument("empty item subset");
  std::set<int> seen;
  for (int j : subset) {
    if (j < 0 || j >= model.p()) {
      throw std::out_of_range("item index out of range");
    }
    if (!seen.insert(j).second) {
      throw std::invalid_argument("duplicate item index in subset");
    }
  }
  checked_cells(static_cast<int>(subset.size()), model.d);
  std::vector<Matrix> phis;
  phis.reserve(subset.size());
  for (int j : subset) phis.push_back(phi_table(model, j));
  return khatri_rao(std::span<const Matrix>(phis)) * model.nu;
}

BlessModel flip_latent_labels(const BlessModel& model, int k) {
  if (k < 0 || k >= model.k()) throw std::out_of_range("latent out of range");
  BlessModel out = model;
  for (int j : model.g.children(k)) {
    std::swap(out.items[j].theta0, out.items[j].theta1);
  }
  const std::size_t patterns = num_patterns(model.k());
  for (std::size_t l = 0; l < patterns; ++l) {
    out.nu(static_cast<Eigen::Index>(l)) =
        model.nu(static_cast<Eigen::Index>(flip_latent(l, k, model.k())));
  }
  return out;
}

BlessModel permute_latents(const BlessModel& model, const std::vector<int>& to) {
  const int k = model.k();
  if (static_cast<int>(to.size()) != k) {
    throw std::invalid_argument("permutation length differs from K");
  }
  BlessModel out = model;
  out.g = model.g.permuted_columns(to);
  const std::size_t patterns = num_patterns(k);
  for (std::size_t l = 0; l < patterns; ++l) {
    std::size_t target = 0;
    for (int e = 0; e < k; ++e) {
      if (latent_bit(l, e, k)) target |= std::size_t{1} << (k - 1 - to[e]);
    }
    out.nu(static_cast<Eigen::Index>(target)) =
        model.nu(static_cast<Eigen::Index>(l));
  }
  return out;
}

double pmf_deviation(const BlessModel& a, const BlessModel& b) {
  return (response_pmf_direct(a) - response_pmf_direct(b)).cwiseAbs().maxCoeff();
}

}  // namespace bless
