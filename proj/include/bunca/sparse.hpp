#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bunca/types.hpp"

namespace bunca {

// Binary relation stored as CSR with sorted, deduplicated columns per row.
class SparseBinaryMatrix {
 public:
  SparseBinaryMatrix() = default;
  SparseBinaryMatrix(Index rows, Index cols);

  // Pairs may arrive unsorted and with duplicates.
  static SparseBinaryMatrix from_pairs(Index rows, Index cols,
                                       std::vector<std::pair<Index, Index>> pairs);
  // Validates the CSR invariants and throws DimensionError on violation.
  static SparseBinaryMatrix from_csr(Index rows, Index cols, std::vector<Index> offsets,
                                     std::vector<Index> indices);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(indices_.size()); }

  std::span<const Index> row(Index r) const {
    return {indices_.data() + offsets_[r], static_cast<std::size_t>(offsets_[r + 1] - offsets_[r])};
  }
  Index row_size(Index r) const { return offsets_[r + 1] - offsets_[r]; }
  bool contains(Index r, Index c) const;

  const std::vector<Index>& offsets() const { return offsets_; }
  const std::vector<Index>& indices() const { return indices_; }

  // Row index of every stored entry, in storage order.
  std::vector<Index> entry_rows() const;
  std::vector<std::pair<Index, Index>> pairs() const;

  bool operator==(const SparseBinaryMatrix&) const = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> offsets_{0};
  std::vector<Index> indices_;
};

// Same layout as SparseBinaryMatrix with a positive count per entry.
class CountMatrix {
 public:
  CountMatrix() = default;
  CountMatrix(SparseBinaryMatrix pattern, std::vector<std::int64_t> counts);

  Index rows() const { return pattern_.rows(); }
  Index cols() const { return pattern_.cols(); }
  Index nnz() const { return pattern_.nnz(); }
  const SparseBinaryMatrix& pattern() const { return pattern_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  // Zero when (r, c) is not stored.
  std::int64_t count(Index r, Index c) const;

 private:
  SparseBinaryMatrix pattern_;
  std::vector<std::int64_t> counts_;
};

// Real-weighted CSR used as a fixed linear operator on dense features.
class WeightedCsr {
 public:
  WeightedCsr() = default;
  WeightedCsr(SparseBinaryMatrix pattern, std::vector<double> weights);

  Index rows() const { return pattern_.rows(); }
  Index cols() const { return pattern_.cols(); }
  Index nnz() const { return pattern_.nnz(); }
  const SparseBinaryMatrix& pattern() const { return pattern_; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(Index r, Index c) const;

  // this * features; features must have cols() rows.
  Matrix multiply(const Matrix& features) const;
  // this^T * features; features must have rows() rows.
  Matrix multiply_transposed(const Matrix& features) const;
  Matrix to_dense() const;

 private:
  SparseBinaryMatrix pattern_;
  std::vector<double> weights_;
};

// Square adjacency with weight(v, v') = 1/sqrt(deg(v) deg(v')).
class NormalizedAdjacency {
 public:
  NormalizedAdjacency() = default;
  // neighbors must describe an undirected graph (every edge stored both ways).
  explicit NormalizedAdjacency(SparseBinaryMatrix neighbors);

  Index num_nodes() const { return matrix_.rows(); }
  Index num_edges() const { return matrix_.nnz(); }
  bool symmetric() const { return symmetric_; }
  Index degree(Index v) const { return matrix_.pattern().row_size(v); }
  const WeightedCsr& matrix() const { return matrix_; }

 private:
  WeightedCsr matrix_;
  bool symmetric_ = true;
};

// Users occupy [0, num_users), bundles [num_users, num_users + num_bundles).
struct UnifiedGraph {
  NormalizedAdjacency adjacency;
  Index num_users = 0;
  Index num_bundles = 0;
};

enum class CooccurrenceSide { kRows, kCols };

SparseBinaryMatrix transpose(const SparseBinaryMatrix& m);

// kRows: M * M^T, kCols: M^T * M. Entry (i, j) counts shared neighbors.
CountMatrix cooccurrence(const SparseBinaryMatrix& m, CooccurrenceSide side);

// Keeps off-diagonal entries whose count reaches the threshold.
SparseBinaryMatrix binarize(const CountMatrix& c, std::int64_t threshold = 1);

// Rows become nodes [0, rows), columns nodes [rows, rows + cols).
NormalizedAdjacency build_bipartite_adjacency(const SparseBinaryMatrix& m);

// Interactions plus user-user and bundle-bundle co-occurrence links. Degrees
// are taken over the combined edge set.
UnifiedGraph build_unified_graph(const SparseBinaryMatrix& interactions,
                                 const SparseBinaryMatrix& user_links,
                                 const SparseBinaryMatrix& bundle_links);

// Row r averages the features of its stored columns; empty rows give zero.
WeightedCsr row_mean_operator(const SparseBinaryMatrix& m);

// One propagation step: out[v] = sum_{v' in N(v)} w(v, v') features[v'].
Matrix spmv_block(const NormalizedAdjacency& adj, const Matrix& features);

}  // namespace bunca
