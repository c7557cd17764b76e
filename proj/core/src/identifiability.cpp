#include "bless/identifiability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bless/model.hpp"
#include "bless/random.hpp"
#include "bless/tensor.hpp"

namespace bless {
namespace {

int latents_from_length(Eigen::Index length) {
  int k = 0;
  while ((Eigen::Index{1} << k) < length) ++k;
  if (k < 1 || (Eigen::Index{1} << k) != length) {
    throw std::invalid_argument("nu length must be a power of two >= 2");
  }
  return k;
}

Vector singular_values(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

double singular_ratio(const Matrix& m) {
  const Vector s = singular_values(m);
  if (s.size() < 2 || s(0) <= 0.0) return 0.0;
  return s(1) / s(0);
}

bool in_unit_interval(const Vector& v) {
  return v.allFinite() && (v.array() >= 0.0).all() && (v.array() <= 1.0).all();
}

double max_parameter_change(const BlessModel& a, const BlessModel& b) {
  double change = (a.nu - b.nu).cwiseAbs().maxCoeff();
  for (int j = 0; j < a.p(); ++j) {
    change = std::max(change,
                      (a.items[j].theta0 - b.items[j].theta0).cwiseAbs().maxCoeff());
    change = std::max(change,
                      (a.items[j].theta1 - b.items[j].theta1).cwiseAbs().maxCoeff());
  }
  return change;
}

// Empty when all tables and nu are valid probability vectors, nu > 0.
std::string simplex_problem(const BlessModel& model) {
  for (int j = 0; j < model.p(); ++j) {
    if (!in_unit_interval(model.items[j].theta0) ||
        !in_unit_interval(model.items[j].theta1)) {
      return "item " + std::to_string(j + 1) + " leaves the probability simplex";
    }
  }
  if (!model.nu.allFinite() || !(model.nu.array() > 0.0).all()) {
    return "nu has non-positive entries";
  }
  return {};
}

std::string format_shift(double shift) {
  std::ostringstream out;
  out.precision(6);
  out << shift;
  return out.str();
}

void check_graph_for_data(const GraphicalMatrix& g, const Dataset& data) {
  if (!g.is_star_forest()) {
    throw std::invalid_argument("G is not a star forest: " + g.violations().front());
  }
  if (g.items() != data.items()) {
    throw std::invalid_argument("G rows differ from the data item count");
  }
}

std::size_t category_power(int d, std::size_t exponent) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    n *= static_cast<std::size_t>(d);
    if (n > kMaxGroupCategories) return kMaxGroupCategories + 1;
  }
  return n;
}

struct PlannedTests {
  std::vector<std::vector<int>> complements;
  std::string note;
};

PlannedTests plan_tests(const Dataset& data, const GraphicalMatrix& g, int k,
                        TestStrategy strategy) {
  const std::vector<int> own = g.children(k);
  if (own.empty()) throw std::invalid_argument("latent has no children");
  if (category_power(data.categories(), own.size()) > kMaxGroupCategories) {
    throw std::invalid_argument("Child(alpha_k) exceeds 4096 joint categories");
  }
  std::vector<std::vector<int>> others;
  for (int l = 0; l < g.latents(); ++l) {
    if (l == k) continue;
    std::vector<int> kids = g.children(l);
    if (!kids.empty()) others.push_back(std::move(kids));
  }
  if (others.empty()) {
    throw std::invalid_argument("no other latent has observed children");
  }

  PlannedTests plan;
  if (strategy == TestStrategy::kFullComplement) {
    std::size_t total = 0;
    for (const auto& kids : others) total += kids.size();
    std::vector<int> complement;
    if (category_power(data.categories(), total) <= kMaxGroupCategories) {
      for (const auto& kids : others) {
        complement.insert(complement.end(), kids.begin(), kids.end());
      }
    } else {
      // one child per other latent in turn until the table guard binds
      for (std::size_t depth = 0; ; ++depth) {
        bool added = false;
        for (const auto& kids : others) {
          if (depth >= kids.size()) continue;
          if (category_power(data.categories(), complement.size() + 1) >
              kMaxGroupCategories) {
            break;
          }
          complement.push_back(kids[depth]);
          added = true;
        }
        if (!added ||
            category_power(data.categories(), complement.size() + 1) >
                kMaxGroupCategories) {
          break;
        }
      }
      std::sort(complement.begin(), complement.end());
      plan.note = "complement reduced to " + std::to_string(complement.size()) +
                  " items to respect the 4096-category guard";
    }
    plan.complements.push_back(std::move(complement));
  } else if (others.size() >= 2) {
    for (std::size_t a = 0; a < others.size(); ++a) {
      for (std::size_t b = a + 1; b < others.size(); ++b) {
        for (int ja : others[a]) {
          for (int jb : others[b]) {
            plan.complements.push_back({std::min(ja, jb), std::max(ja, jb)});
          }
        }
      }
    }
  } else {
    for (int j : others.front()) plan.complements.push_back({j});
    plan.note = "only one other latent has children; testing single items";
  }
  return plan;
}

void apply_level(IdentifiabilityTestResult& result) {
  const double n = static_cast<double>(result.tests.size());
  result.per_test_level =
      result.bonferroni && n > 0 ? result.alpha / n : result.alpha;
  result.evidence = false;
  result.latent_evidence.assign(result.latents.size(), false);
  for (std::size_t t = 0; t < result.tests.size(); ++t) {
    TestReport& report = result.tests[t];
    report.level = result.per_test_level;
    report.reject = report.p_value < result.per_test_level;
    if (report.reject) {
      result.evidence = true;
      const auto pos = std::find(result.latents.begin(), result.latents.end(),
                                 result.test_latent[t]) -
                       result.latents.begin();
      result.latent_evidence[static_cast<std::size_t>(pos)] = true;
    }
  }
}

}  // namespace

std::string_view to_string(LatentVerdict verdict) {
  switch (verdict) {
    case LatentVerdict::kNonIdentifiable: return "non-identifiable";
    case LatentVerdict::kGenericBoundary: return "generic-boundary";
    case LatentVerdict::kStrict: return "strict";
  }
  return "unknown";
}

std::string_view to_string(GraphVerdict verdict) {
  switch (verdict) {
    case GraphVerdict::kNonIdentifiable: return "non-identifiable";
    case GraphVerdict::kGeneric: return "generic";
    case GraphVerdict::kStrict: return "strict";
  }
  return "unknown";
}

std::string_view to_string(TestStrategy strategy) {
  return strategy == TestStrategy::kFullComplement ? "full-complement"
                                                   : "pairwise-subsets";
}

TestStrategy parse_strategy(std::string_view name) {
  if (name == "full-complement") return TestStrategy::kFullComplement;
  if (name == "pairwise-subsets") return TestStrategy::kPairwiseSubsets;
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

GraphClassification classify_graph(const GraphicalMatrix& g) {
  if (!g.is_star_forest()) {
    throw std::invalid_argument("G is not a star forest: " + g.violations().front());
  }
  GraphClassification out;
  out.child_counts = g.child_counts();
  int min_count = *std::min_element(out.child_counts.begin(), out.child_counts.end());
  for (int count : out.child_counts) {
    out.verdicts.push_back(count < 2    ? LatentVerdict::kNonIdentifiable
                           : count == 2 ? LatentVerdict::kGenericBoundary
                                        : LatentVerdict::kStrict);
  }
  out.overall = min_count < 2    ? GraphVerdict::kNonIdentifiable
                : min_count == 2 ? GraphVerdict::kGeneric
                                 : GraphVerdict::kStrict;
  return out;
}

Matrix pk_matrix(const Vector& nu, int k) {
  const int latents = latents_from_length(nu.size());
  if (k < 0 || k >= latents) throw std::out_of_range("latent out of range");
  const auto rows = static_cast<Eigen::Index>(num_patterns(latents - 1));
  Matrix out(rows, 2);
  for (Eigen::Index s = 0; s < rows; ++s) {
    for (int a = 0; a < 2; ++a) {
      out(s, a) = nu(static_cast<Eigen::Index>(
          insert_latent_bit(static_cast<std::size_t>(s), a, k, latents)));
    }
  }
  return out;
}

IndependenceCheck latent_independence_check(const Vector& nu, int k, double tol) {
  const Matrix pk = pk_matrix(nu, k);
  IndependenceCheck out;
  out.measure = singular_ratio(pk);
  out.independent = out.measure < tol;
  const double p0 = pk.col(0).sum();
  out.rho = p0 > 0.0 ? pk.col(1).sum() / p0 : 0.0;
  return out;
}

double k2_dependence_determinant(const Vector& nu) {
  if (nu.size() != 4) throw std::invalid_argument("needs K = 2");
  return nu(0) * nu(3) - nu(1) * nu(2);
}

std::vector<double> perturbation_grid(int count, double radius) {
  std::vector<double> shifts;
  if (count <= 0) return shifts;
  const int half = (count + 1) / 2;
  for (int i = 0; i < count; ++i) {
    const double magnitude =
        radius * (0.5 + 0.5 * static_cast<double>(i / 2 + 1) / half);
    shifts.push_back(i % 2 == 0 ? magnitude : -magnitude);
  }
  return shifts;
}

BlessModel prop1_alternative(const BlessModel& model, int j, double theta11_new) {
  const int k = model.g.parent_of(j);
  const int latents = model.k();
  const ItemCpt& item = model.items[j];
  const double gap = item.theta1(0) - item.theta0(0);
  const double ratio = (theta11_new - item.theta0(0)) / gap;

  BlessModel alt = model;
  alt.items[j].theta1 = item.theta0 + (item.theta1 - item.theta0) * ratio;
  alt.items[j].theta1(0) = theta11_new;
  const std::size_t rest = num_patterns(latents - 1);
  for (std::size_t s = 0; s < rest; ++s) {
    const auto on = static_cast<Eigen::Index>(insert_latent_bit(s, 1, k, latents));
    const auto off = static_cast<Eigen::Index>(insert_latent_bit(s, 0, k, latents));
    alt.nu(on) = model.nu(on) / ratio;
    alt.nu(off) = model.nu(off) + model.nu(on) *
                                      (theta11_new - item.theta1(0)) /
                                      (theta11_new - item.theta0(0));
  }
  return alt;
}

AlternativeFamily construct_prop1_alternatives(const BlessModel& model, int j,
                                               int count, double radius) {
  if (j < 0 || j >= model.p()) throw std::out_of_range("item out of range");
  if (count < 0) throw std::invalid_argument("count must be >= 0");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  const int k = model.g.parent_of(j);
  if (model.g.children(k).size() != 1) {
    throw PreconditionError("item " + std::to_string(j + 1) +
                            " is not the only child of latent " +
                            std::to_string(k + 1));
  }
  AlternativeFamily family;
  family.tag = ConstructionTag::kProp1;
  family.target = j;
  const Vector source_pmf = response_pmf_direct(model);
  for (double shift : perturbation_grid(count, radius)) {
    const double target = model.items[j].theta1(0) + shift;
    if (target - model.items[j].theta0(0) <= 0.0) {
      family.skipped.push_back("shift " + format_shift(shift) +
                               ": theta1 would not exceed theta0");
      continue;
    }
    BlessModel alt = prop1_alternative(model, j, target);
    if (const std::string problem = simplex_problem(alt); !problem.empty()) {
      family.skipped.push_back("shift " + format_shift(shift) + ": " + problem);
      continue;
    }
    AlternativeMember member;
    member.pmf_deviation =
        (response_pmf_direct(alt) - source_pmf).cwiseAbs().maxCoeff();
    member.perturbation = shift;
    member.parameter_change = max_parameter_change(alt, model);
    member.model = std::move(alt);
    family.max_pmf_deviation = std::max(family.max_pmf_deviation, member.pmf_deviation);
    family.members.push_back(std::move(member));
  }
  return family;
}

BlessModel thm2b_alternative(const BlessModel& model, int k, double shift0,
                             double shift1, double* closed_form_gap) {
  const std::vector<int> kids = model.g.children(k);
  if (kids.size() != 2) {
    throw PreconditionError("latent " + std::to_string(k + 1) +
                            " does not have exactly two children");
  }
  const int latents = model.k();
  const std::size_t rest = num_patterns(latents - 1);
  double pi0 = 0.0;
  double pi1 = 0.0;
  Vector others(static_cast<Eigen::Index>(rest));
  for (std::size_t s = 0; s < rest; ++s) {
    const double off = model.nu(static_cast<Eigen::Index>(insert_latent_bit(s, 0, k, latents)));
    const double on = model.nu(static_cast<Eigen::Index>(insert_latent_bit(s, 1, k, latents)));
    pi0 += off;
    pi1 += on;
    others(static_cast<Eigen::Index>(s)) = off + on;
  }
  const double rho = pi1 / pi0;

  const ItemCpt& first = model.items[kids[0]];
  const ItemCpt& second = model.items[kids[1]];
  const double gap = first.theta1(0) - first.theta0(0);
  const double a = shift0 / gap;
  const double b = shift1 / gap;

  // The pair block is A diag(pi) B^T; A -> A T with T = [1-a, b; a, 1-b]
  // is compensated exactly by pi -> T^{-1} pi and a matching B.
  BlessModel alt = model;
  ItemCpt& first_alt = alt.items[kids[0]];
  ItemCpt& second_alt = alt.items[kids[1]];
  first_alt.theta0 = first.theta0 + a * (first.theta1 - first.theta0);
  first_alt.theta1 = first.theta1 - b * (first.theta1 - first.theta0);
  const double mass0 = (1.0 - b) * pi0 - b * pi1;
  const double mass1 = (1.0 - a) * pi1 - a * pi0;
  second_alt.theta0 = ((1.0 - b) * pi0 * second.theta0 - b * pi1 * second.theta1) / mass0;
  second_alt.theta1 = ((1.0 - a) * pi1 * second.theta1 - a * pi0 * second.theta0) / mass1;
  const double det = 1.0 - a - b;
  const double new_pi[2] = {mass0 / det, mass1 / det};
  for (std::size_t s = 0; s < rest; ++s) {
    for (int bit = 0; bit < 2; ++bit) {
      alt.nu(static_cast<Eigen::Index>(insert_latent_bit(s, bit, k, latents))) =
          new_pi[bit] * others(static_cast<Eigen::Index>(s));
    }
  }

  if (closed_form_gap != nullptr) {
    // Direct per-category solution for theta-bar^{(j')}_{c|1} given
    // theta-bar^{(j)}_{c|0}.
    double worst = 0.0;
    for (int c = 0; c < model.d; ++c) {
      const double moved = first.theta0(c) - first_alt.theta0(c);
      const double denom = moved + rho * (first.theta1(c) - first_alt.theta0(c));
      if (std::abs(denom) < 1e-12) continue;
      const double direct =
          second.theta1(c) + moved * (second.theta0(c) - second.theta1(c)) / denom;
      worst = std::max(worst, std::abs(direct - second_alt.theta1(c)));
    }
    *closed_form_gap = worst;
  }
  return alt;
}

AlternativeFamily construct_thm2b_alternatives(const BlessModel& model, int k,
                                               int count, double radius,
                                               std::uint64_t seed, double tol) {
  if (k < 0 || k >= model.k()) throw std::out_of_range("latent out of range");
  if (count < 0) throw std::invalid_argument("count must be >= 0");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (model.g.children(k).size() != 2) {
    throw PreconditionError("latent " + std::to_string(k + 1) +
                            " does not have exactly two children");
  }
  const IndependenceCheck check = latent_independence_check(model.nu, k, tol);
  if (!check.independent) {
    std::ostringstream msg;
    msg << "latent " << k + 1
        << " is not independent of the other latents (sigma2/sigma1 = "
        << check.measure << " >= " << tol
        << "); with two children per latent, dependent latents make the "
           "parameters identifiable, so no equivalent family exists";
    throw PreconditionError(msg.str());
  }

  AlternativeFamily family;
  family.tag = ConstructionTag::kThm2b;
  family.target = k;
  const Vector source_pmf = response_pmf_direct(model);
  Rng rng(seed);
  for (double shift0 : perturbation_grid(count, radius)) {
    const double shift1 = rng.uniform(-radius, radius);
    double gap = 0.0;
    BlessModel alt = thm2b_alternative(model, k, shift0, shift1, &gap);
    const std::string label =
        "shifts (" + format_shift(shift0) + ", " + format_shift(shift1) + ")";
    if (const std::string problem = simplex_problem(alt); !problem.empty()) {
      family.skipped.push_back(label + ": " + problem);
      continue;
    }
    AlternativeMember member;
    member.pmf_deviation =
        (response_pmf_direct(alt) - source_pmf).cwiseAbs().maxCoeff();
    if (member.pmf_deviation >= 1e-10) {
      family.skipped.push_back(label + ": pmf deviation " +
                               format_shift(member.pmf_deviation));
      continue;
    }
    member.perturbation = shift0;
    member.parameter_change = max_parameter_change(alt, model);
    member.model = std::move(alt);
    family.closed_form_gap = std::max(family.closed_form_gap, gap);
    family.max_pmf_deviation = std::max(family.max_pmf_deviation, member.pmf_deviation);
    family.members.push_back(std::move(member));
  }
  return family;
}

IdentifiabilityTestResult identifiability_test(const Dataset& data,
                                               const GraphicalMatrix& g, int k,
                                               TestStrategy strategy,
                                               double alpha, bool bonferroni) {
  check_graph_for_data(g, data);
  if (k < 0 || k >= g.latents()) throw std::out_of_range("latent out of range");
  IdentifiabilityTestResult result;
  result.alpha = alpha;
  result.bonferroni = bonferroni;
  result.latents = {k};
  const PlannedTests plan = plan_tests(data, g, k, strategy);
  result.note = plan.note;
  const std::vector<int> own = g.children(k);
  for (const auto& complement : plan.complements) {
    result.tests.push_back(chi2_independence_test(data, own, complement, alpha));
    result.test_latent.push_back(k);
  }
  apply_level(result);
  return result;
}

IdentifiabilityTestResult identifiability_test_all(const Dataset& data,
                                                   const GraphicalMatrix& g,
                                                   TestStrategy strategy,
                                                   double alpha,
                                                   bool bonferroni) {
  check_graph_for_data(g, data);
  IdentifiabilityTestResult result;
  result.alpha = alpha;
  result.bonferroni = bonferroni;
  const std::vector<int> counts = g.child_counts();
  for (int k = 0; k < g.latents(); ++k) {
    if (counts[k] == 2) result.latents.push_back(k);
  }
  if (result.latents.empty()) {
    throw std::invalid_argument("no latent has exactly two children");
  }
  for (int k : result.latents) {
    const PlannedTests plan = plan_tests(data, g, k, strategy);
    if (!plan.note.empty()) {
      result.note += (result.note.empty() ? "" : "; ") + std::string("latent ") +
                     std::to_string(k + 1) + ": " + plan.note;
    }
    const std::vector<int> own = g.children(k);
    for (const auto& complement : plan.complements) {
      result.tests.push_back(chi2_independence_test(data, own, complement, alpha));
      result.test_latent.push_back(k);
    }
  }
  apply_level(result);
  return result;
}

KruskalReport kruskal_rank_check(const BlessModel& model, int k) {
  const std::vector<int> kids = model.g.children(k);
  if (kids.size() < 3) {
    throw PreconditionError("latent " + std::to_string(k + 1) +
                            " has fewer than three children");
  }
  KruskalReport report;
  report.latent = k;
  report.groups.resize(3);
  for (std::size_t i = 0; i < kids.size(); ++i) {
    report.groups[i % 3].items.push_back(kids[i]);
  }
  report.full_rank = true;
  for (RankGroup& group : report.groups) {
    std::vector<Matrix> factors;
    for (int j : group.items) {
      Matrix f(model.d, 2);
      f.col(0) = model.items[j].theta0;
      f.col(1) = model.items[j].theta1;
      factors.push_back(std::move(f));
    }
    const Matrix psi = khatri_rao(std::span<const Matrix>(factors));
    const Vector s = singular_values(psi);
    group.singular_ratio = s(0) > 0.0 ? s(1) / s(0) : 0.0;
    group.rank = s(0) <= 0.0 ? 0 : (group.singular_ratio > 1e-10 ? 2 : 1);
    report.full_rank = report.full_rank && group.rank == 2;
  }
  return report;
}

}  // namespace bless
