#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bless {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an exact enumeration would exceed the configured cell budget.
class SizeGuardError : public Error {
 public:
  using Error::Error;
};

/// A documented mathematical precondition of a construction does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-range input data (CSV / JSON).
class DataError : public Error {
 public:
  using Error::Error;
};

// Latent patterns are indexed big-endian: pattern = sum_k alpha_k 2^{K-1-k}
// with 0-based k, so alpha_1 is the most significant bit.
inline std::size_t num_patterns(int num_latents) {
  return std::size_t{1} << num_latents;
}

inline int latent_bit(std::size_t pattern, int k, int num_latents) {
  return static_cast<int>((pattern >> (num_latents - 1 - k)) & 1U);
}

inline std::size_t flip_latent(std::size_t pattern, int k, int num_latents) {
  return pattern ^ (std::size_t{1} << (num_latents - 1 - k));
}

/// Pattern with latent k set to `bit` and the other K-1 latents taken from
/// `rest`, itself a big-endian index over the remaining latents.
inline std::size_t insert_latent_bit(std::size_t rest, int bit, int k,
                                     int num_latents) {
  const int low_bits = num_latents - 1 - k;
  const std::size_t low = rest & ((std::size_t{1} << low_bits) - 1);
  const std::size_t high = rest >> low_bits;
  return (high << (low_bits + 1)) |
         (static_cast<std::size_t>(bit) << low_bits) | low;
}

/// p x K binary incidence matrix of the latent-to-item star forest.
class GraphicalMatrix {
 public:
  GraphicalMatrix() = default;
  GraphicalMatrix(int items, int latents);
  explicit GraphicalMatrix(const std::vector<std::vector<int>>& rows);

  /// One parent per item, 0-based latent indices.
  static GraphicalMatrix from_parents(const std::vector<int>& parents,
                                      int latents);
  /// (I_K; I_K; ...; I_K) with `copies` stacked identity blocks.
  static GraphicalMatrix identity_stack(int latents, int copies);

  int items() const { return items_; }
  int latents() const { return latents_; }

  int operator()(int j, int k) const {
    return entries_[static_cast<std::size_t>(j) * latents_ + k];
  }
  void set(int j, int k, int value);

  /// Throws std::logic_error when row j is not a single-parent row.
  int parent_of(int j) const;
  std::vector<int> parents() const;
  std::vector<int> children(int k) const;
  std::vector<int> child_counts() const;

  /// Empty when every row has exactly one 1 and all entries are binary.
  std::vector<std::string> violations() const;
  bool is_star_forest() const { return violations().empty(); }

  GraphicalMatrix permuted_columns(const std::vector<int>& to) const;

  friend bool operator==(const GraphicalMatrix&,
                         const GraphicalMatrix&) = default;

 private:
  int items_ = 0;
  int latents_ = 0;
  std::vector<int> entries_;
};

/// Conditional distributions of one item given its parent absent / present.
struct ItemCpt {
  Vector theta0;
  Vector theta1;
};

struct BlessModel {
  GraphicalMatrix g;
  std::vector<ItemCpt> items;
  Vector nu;  // length 2^K, big-endian pattern index
  int d = 2;

  int p() const { return g.items(); }
  int k() const { return g.latents(); }
};

/// N x p matrix of observed categories, stored 0-based.
class Dataset {
 public:
  Dataset() = default;
  Dataset(int subjects, int items, int categories);

  int subjects() const { return subjects_; }
  int items() const { return items_; }
  int categories() const { return categories_; }

  int operator()(int i, int j) const {
    return cells_[static_cast<std::size_t>(i) * items_ + j];
  }
  void set(int i, int j, int category);

  const std::vector<std::uint16_t>& cells() const { return cells_; }

 private:
  int subjects_ = 0;
  int items_ = 0;
  int categories_ = 0;
  std::vector<std::uint16_t> cells_;
};

/// Distinct response rows with multiplicities. Weights need not be integers,
/// so an exact pmf can stand in for infinitely many observations.
struct ResponseTable {
  int items = 0;
  int categories = 0;
  std::vector<std::vector<int>> rows;  // 0-based categories
  std::vector<double> weights;

  std::size_t size() const { return rows.size(); }
  double total_weight() const;
};

ResponseTable compress(const Dataset& data);

}  // namespace bless
