#include "bless/types.hpp"

#include <map>
#include <numeric>

namespace bless {

GraphicalMatrix::GraphicalMatrix(int items, int latents)
    : items_(items), latents_(latents) {
  if (items < 1 || latents < 1) {
    throw std::invalid_argument("graphical matrix needs p >= 1 and K >= 1");
  }
  entries_.assign(static_cast<std::size_t>(items) * latents, 0);
}

GraphicalMatrix::GraphicalMatrix(const std::vector<std::vector<int>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw std::invalid_argument("graphical matrix needs p >= 1 and K >= 1");
  }
  items_ = static_cast<int>(rows.size());
  latents_ = static_cast<int>(rows.front().size());
  entries_.reserve(static_cast<std::size_t>(items_) * latents_);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != latents_) {
      throw std::invalid_argument("graphical matrix rows differ in length");
    }
    entries_.insert(entries_.end(), row.begin(), row.end());
  }
}

GraphicalMatrix GraphicalMatrix::from_parents(const std::vector<int>& parents,
                                              int latents) {
  GraphicalMatrix g(static_cast<int>(parents.size()), latents);
  for (int j = 0; j < g.items(); ++j) {
    if (parents[j] < 0 || parents[j] >= latents) {
      throw std::out_of_range("parent index out of range");
    }
    g.set(j, parents[j], 1);
  }
  return g;
}

GraphicalMatrix GraphicalMatrix::identity_stack(int latents, int copies) {
  std::vector<int> parents;
  for (int c = 0; c < copies; ++c) {
    for (int k = 0; k < latents; ++k) parents.push_back(k);
  }
  return from_parents(parents, latents);
}

void GraphicalMatrix::set(int j, int k, int value) {
  if (j < 0 || j >= items_ || k < 0 || k >= latents_) {
    throw std::out_of_range("graphical matrix index out of range");
  }
  entries_[static_cast<std::size_t>(j) * latents_ + k] = value;
}

int GraphicalMatrix::parent_of(int j) const {
  if (j < 0 || j >= items_) throw std::out_of_range("item index out of range");
  int parent = -1;
  for (int k = 0; k < latents_; ++k) {
    if ((*this)(j, k) == 1) {
      if (parent >= 0) throw std::logic_error("item has several parents");
      parent = k;
    }
  }
  if (parent < 0) throw std::logic_error("item has no parent");
  return parent;
}

std::vector<int> GraphicalMatrix::parents() const {
  std::vector<int> out(items_);
  for (int j = 0; j < items_; ++j) out[j] = parent_of(j);
  return out;
}

std::vector<int> GraphicalMatrix::children(int k) const {
  if (k < 0 || k >= latents_) {
    throw std::out_of_range("latent index out of range");
  }
  std::vector<int> out;
  for (int j = 0; j < items_; ++j) {
    if ((*this)(j, k) == 1) out.push_back(j);
  }
  return out;
}

std::vector<int> GraphicalMatrix::child_counts() const {
  std::vector<int> counts(latents_, 0);
  for (int j = 0; j < items_; ++j) {
    for (int k = 0; k < latents_; ++k) counts[k] += (*this)(j, k) == 1;
  }
  return counts;
}

std::vector<std::string> GraphicalMatrix::violations() const {
  std::vector<std::string> out;
  for (int j = 0; j < items_; ++j) {
    int ones = 0;
    bool binary = true;
    for (int k = 0; k < latents_; ++k) {
      const int v = (*this)(j, k);
      binary = binary && (v == 0 || v == 1);
      ones += v == 1;
    }
    const std::string row = "row " + std::to_string(j + 1);
    if (!binary) out.push_back(row + " has non-binary entries");
    if (ones == 0) {
      out.push_back(row + " has no parent");
    } else if (ones > 1) {
      out.push_back(row + " has " + std::to_string(ones) + " parents");
    }
  }
  return out;
}

GraphicalMatrix GraphicalMatrix::permuted_columns(
    const std::vector<int>& to) const {
  GraphicalMatrix out(items_, latents_);
  for (int j = 0; j < items_; ++j) {
    for (int k = 0; k < latents_; ++k) out.set(j, to[k], (*this)(j, k));
  }
  return out;
}

Dataset::Dataset(int subjects, int items, int categories)
    : subjects_(subjects), items_(items), categories_(categories) {
  if (subjects < 0 || items < 1 || categories < 2) {
    throw std::invalid_argument("dataset needs N >= 0, p >= 1, d >= 2");
  }
  cells_.assign(static_cast<std::size_t>(subjects) * items, 0);
}

void Dataset::set(int i, int j, int category) {
  if (category < 0 || category >= categories_) {
    throw DataError("category out of range");
  }
  cells_[static_cast<std::size_t>(i) * items_ + j] =
      static_cast<std::uint16_t>(category);
}

double ResponseTable::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

ResponseTable compress(const Dataset& data) {
  std::map<std::vector<int>, double> counts;
  std::vector<int> row(data.items());
  for (int i = 0; i < data.subjects(); ++i) {
    for (int j = 0; j < data.items(); ++j) row[j] = data(i, j);
    counts[row] += 1.0;
  }
  ResponseTable table;
  table.items = data.items();
  table.categories = data.categories();
  table.rows.reserve(counts.size());
  table.weights.reserve(counts.size());
  for (auto& [r, w] : counts) {
    table.rows.push_back(r);
    table.weights.push_back(w);
  }
  return table;
}

}  // namespace bless
