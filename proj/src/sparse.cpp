#include "bunca/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "bunca/error.hpp"
#include "bunca/parallel.hpp"

namespace bunca {

namespace {

std::string shape_str(Index r, Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

// Generic sparse product accumulation: for each output row, walk
// left[row] -> right[mid] and count hits.
CountMatrix count_product(const SparseBinaryMatrix& left, const SparseBinaryMatrix& right) {
  const Index out_rows = left.rows();
  const Index out_cols = right.cols();
  std::vector<Index> offsets(static_cast<std::size_t>(out_rows) + 1, 0);
  std::vector<Index> indices;
  std::vector<std::int64_t> counts;
  std::vector<std::int64_t> acc(static_cast<std::size_t>(out_cols), 0);
  std::vector<Index> touched;
  for (Index r = 0; r < out_rows; ++r) {
    touched.clear();
    for (Index mid : left.row(r)) {
      for (Index c : right.row(mid)) {
        if (acc[c]++ == 0) touched.push_back(c);
      }
    }
    std::sort(touched.begin(), touched.end());
    for (Index c : touched) {
      indices.push_back(c);
      counts.push_back(acc[c]);
      acc[c] = 0;
    }
    offsets[r + 1] = static_cast<Index>(indices.size());
  }
  return CountMatrix(SparseBinaryMatrix::from_csr(out_rows, out_cols, std::move(offsets),
                                                  std::move(indices)),
                     std::move(counts));
}

}  // namespace

SparseBinaryMatrix::SparseBinaryMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), offsets_(static_cast<std::size_t>(rows) + 1, 0) {
  if (rows < 0 || cols < 0) throw DimensionError("negative matrix shape " + shape_str(rows, cols));
}

SparseBinaryMatrix SparseBinaryMatrix::from_pairs(Index rows, Index cols,
                                                  std::vector<std::pair<Index, Index>> pairs) {
  for (const auto& [r, c] : pairs) {
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      std::ostringstream os;
      os << "entry (" << r << ", " << c << ") outside " << shape_str(rows, cols);
      throw DimensionError(os.str());
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::vector<Index> offsets(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<Index> indices;
  indices.reserve(pairs.size());
  for (const auto& [r, c] : pairs) {
    ++offsets[r + 1];
    indices.push_back(c);
  }
  for (Index r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
  return from_csr(rows, cols, std::move(offsets), std::move(indices));
}

SparseBinaryMatrix SparseBinaryMatrix::from_csr(Index rows, Index cols, std::vector<Index> offsets,
                                                std::vector<Index> indices) {
  if (rows < 0 || cols < 0) throw DimensionError("negative matrix shape " + shape_str(rows, cols));
  if (offsets.size() != static_cast<std::size_t>(rows) + 1 || offsets.front() != 0 ||
      offsets.back() != static_cast<Index>(indices.size())) {
    throw DimensionError("row offsets inconsistent with shape " + shape_str(rows, cols));
  }
  for (Index r = 0; r < rows; ++r) {
    if (offsets[r] > offsets[r + 1]) throw DimensionError("row offsets not monotone");
    for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
      if (indices[k] < 0 || indices[k] >= cols) throw DimensionError("column index out of range");
      if (k > offsets[r] && indices[k] <= indices[k - 1]) {
        throw DimensionError("columns not strictly increasing in row " + std::to_string(r));
      }
    }
  }
  SparseBinaryMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.offsets_ = std::move(offsets);
  m.indices_ = std::move(indices);
  return m;
}

bool SparseBinaryMatrix::contains(Index r, Index c) const {
  if (r < 0 || r >= rows_) return false;
  const auto cols = row(r);
  return std::binary_search(cols.begin(), cols.end(), c);
}

std::vector<Index> SparseBinaryMatrix::entry_rows() const {
  std::vector<Index> out(indices_.size());
  for (Index r = 0; r < rows_; ++r) {
    std::fill(out.begin() + offsets_[r], out.begin() + offsets_[r + 1], r);
  }
  return out;
}

std::vector<std::pair<Index, Index>> SparseBinaryMatrix::pairs() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(indices_.size());
  for (Index r = 0; r < rows_; ++r) {
    for (Index c : row(r)) out.emplace_back(r, c);
  }
  return out;
}

CountMatrix::CountMatrix(SparseBinaryMatrix pattern, std::vector<std::int64_t> counts)
    : pattern_(std::move(pattern)), counts_(std::move(counts)) {
  if (counts_.size() != static_cast<std::size_t>(pattern_.nnz())) {
    throw DimensionError("count array size differs from stored entries");
  }
  for (auto v : counts_) {
    if (v < 1) throw DimensionError("stored co-occurrence count below 1");
  }
}

std::int64_t CountMatrix::count(Index r, Index c) const {
  if (r < 0 || r >= rows()) return 0;
  const auto cols = pattern_.row(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0;
  return counts_[pattern_.offsets()[r] + (it - cols.begin())];
}

WeightedCsr::WeightedCsr(SparseBinaryMatrix pattern, std::vector<double> weights)
    : pattern_(std::move(pattern)), weights_(std::move(weights)) {
  if (weights_.size() != static_cast<std::size_t>(pattern_.nnz())) {
    throw DimensionError("weight array size differs from stored entries");
  }
}

double WeightedCsr::weight(Index r, Index c) const {
  if (r < 0 || r >= rows()) return 0.0;
  const auto cols = pattern_.row(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return weights_[pattern_.offsets()[r] + (it - cols.begin())];
}

Matrix WeightedCsr::multiply(const Matrix& features) const {
  if (features.rows() != cols()) {
    throw DimensionError("sparse product: operator has " + std::to_string(cols()) +
                         " columns, features have " + std::to_string(features.rows()) + " rows");
  }
  Matrix out = Matrix::Zero(rows(), features.cols());
  const auto& offsets = pattern_.offsets();
  const auto& indices = pattern_.indices();
  parallel_for(rows(), [&](Index begin, Index end) {
    for (Index r = begin; r < end; ++r) {
      for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
        out.row(r).noalias() += weights_[k] * features.row(indices[k]);
      }
    }
  });
  return out;
}

Matrix WeightedCsr::multiply_transposed(const Matrix& features) const {
  if (features.rows() != rows()) {
    throw DimensionError("transposed sparse product: operator has " + std::to_string(rows()) +
                         " rows, features have " + std::to_string(features.rows()));
  }
  Matrix out = Matrix::Zero(cols(), features.cols());
  const auto& offsets = pattern_.offsets();
  const auto& indices = pattern_.indices();
  for (Index r = 0; r < rows(); ++r) {
    for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
      out.row(indices[k]).noalias() += weights_[k] * features.row(r);
    }
  }
  return out;
}

Matrix WeightedCsr::to_dense() const {
  Matrix out = Matrix::Zero(rows(), cols());
  const auto& offsets = pattern_.offsets();
  const auto& indices = pattern_.indices();
  for (Index r = 0; r < rows(); ++r) {
    for (Index k = offsets[r]; k < offsets[r + 1]; ++k) out(r, indices[k]) = weights_[k];
  }
  return out;
}

NormalizedAdjacency::NormalizedAdjacency(SparseBinaryMatrix neighbors) {
  if (neighbors.rows() != neighbors.cols()) throw DimensionError("adjacency must be square");
  const Index n = neighbors.rows();
  std::vector<double> weights(static_cast<std::size_t>(neighbors.nnz()));
  const auto& offsets = neighbors.offsets();
  const auto& indices = neighbors.indices();
  for (Index v = 0; v < n; ++v) {
    for (Index k = offsets[v]; k < offsets[v + 1]; ++k) {
      const Index u = indices[k];
      if (!neighbors.contains(u, v)) throw DimensionError("adjacency is not undirected");
      const double dv = static_cast<double>(neighbors.row_size(v));
      const double du = static_cast<double>(neighbors.row_size(u));
      weights[k] = 1.0 / std::sqrt(dv * du);
    }
  }
  matrix_ = WeightedCsr(std::move(neighbors), std::move(weights));
  symmetric_ = true;
}

SparseBinaryMatrix transpose(const SparseBinaryMatrix& m) {
  std::vector<Index> offsets(static_cast<std::size_t>(m.cols()) + 1, 0);
  for (Index c : m.indices()) ++offsets[c + 1];
  for (Index c = 0; c < m.cols(); ++c) offsets[c + 1] += offsets[c];
  std::vector<Index> indices(static_cast<std::size_t>(m.nnz()));
  std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
  // Rows are visited in increasing order, so each output row stays sorted.
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c : m.row(r)) indices[cursor[c]++] = r;
  }
  return SparseBinaryMatrix::from_csr(m.cols(), m.rows(), std::move(offsets), std::move(indices));
}

CountMatrix cooccurrence(const SparseBinaryMatrix& m, CooccurrenceSide side) {
  const SparseBinaryMatrix mt = transpose(m);
  return side == CooccurrenceSide::kRows ? count_product(m, mt) : count_product(mt, m);
}

SparseBinaryMatrix binarize(const CountMatrix& c, std::int64_t threshold) {
  if (c.rows() != c.cols()) throw DimensionError("binarize expects a square count matrix");
  if (threshold < 1) throw DimensionError("co-occurrence threshold must be >= 1");
  const auto& pattern = c.pattern();
  const auto& counts = c.counts();
  std::vector<Index> offsets(static_cast<std::size_t>(c.rows()) + 1, 0);
  std::vector<Index> indices;
  for (Index r = 0; r < c.rows(); ++r) {
    for (Index k = pattern.offsets()[r]; k < pattern.offsets()[r + 1]; ++k) {
      const Index col = pattern.indices()[k];
      if (col != r && counts[k] >= threshold) indices.push_back(col);
    }
    offsets[r + 1] = static_cast<Index>(indices.size());
  }
  return SparseBinaryMatrix::from_csr(c.rows(), c.cols(), std::move(offsets), std::move(indices));
}

NormalizedAdjacency build_bipartite_adjacency(const SparseBinaryMatrix& m) {
  const Index left = m.rows();
  const Index n = left + m.cols();
  const SparseBinaryMatrix mt = transpose(m);
  std::vector<Index> offsets(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> indices;
  indices.reserve(2 * static_cast<std::size_t>(m.nnz()));
  for (Index r = 0; r < left; ++r) {
    for (Index c : m.row(r)) indices.push_back(left + c);
    offsets[r + 1] = static_cast<Index>(indices.size());
  }
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index r : mt.row(c)) indices.push_back(r);
    offsets[left + c + 1] = static_cast<Index>(indices.size());
  }
  return NormalizedAdjacency(SparseBinaryMatrix::from_csr(n, n, std::move(offsets), std::move(indices)));
}

UnifiedGraph build_unified_graph(const SparseBinaryMatrix& interactions,
                                 const SparseBinaryMatrix& user_links,
                                 const SparseBinaryMatrix& bundle_links) {
  const Index nu = interactions.rows();
  const Index nb = interactions.cols();
  if (user_links.rows() != nu || user_links.cols() != nu) {
    throw DimensionError("user links are " + shape_str(user_links.rows(), user_links.cols()) +
                         ", expected " + shape_str(nu, nu));
  }
  if (bundle_links.rows() != nb || bundle_links.cols() != nb) {
    throw DimensionError("bundle links are " + shape_str(bundle_links.rows(), bundle_links.cols()) +
                         ", expected " + shape_str(nb, nb));
  }
  for (const auto* links : {&user_links, &bundle_links}) {
    for (Index r = 0; r < links->rows(); ++r) {
      if (links->contains(r, r)) {
        throw DimensionError("self-link on node " + std::to_string(r) + " in co-occurrence input");
      }
      for (Index c : links->row(r)) {
        if (!links->contains(c, r)) throw DimensionError("co-occurrence links are not symmetric");
      }
    }
  }
  const SparseBinaryMatrix xt = transpose(interactions);
  std::vector<Index> offsets(static_cast<std::size_t>(nu + nb) + 1, 0);
  std::vector<Index> indices;
  for (Index u = 0; u < nu; ++u) {
    // user ids precede bundle ids, so appending users then bundles stays sorted
    for (Index v : user_links.row(u)) indices.push_back(v);
    for (Index b : interactions.row(u)) indices.push_back(nu + b);
    offsets[u + 1] = static_cast<Index>(indices.size());
  }
  for (Index b = 0; b < nb; ++b) {
    for (Index u : xt.row(b)) indices.push_back(u);
    for (Index v : bundle_links.row(b)) indices.push_back(nu + v);
    offsets[nu + b + 1] = static_cast<Index>(indices.size());
  }
  UnifiedGraph g;
  g.adjacency = NormalizedAdjacency(
      SparseBinaryMatrix::from_csr(nu + nb, nu + nb, std::move(offsets), std::move(indices)));
  g.num_users = nu;
  g.num_bundles = nb;
  return g;
}

WeightedCsr row_mean_operator(const SparseBinaryMatrix& m) {
  std::vector<double> weights(static_cast<std::size_t>(m.nnz()));
  for (Index r = 0; r < m.rows(); ++r) {
    const double w = 1.0 / static_cast<double>(std::max<Index>(1, m.row_size(r)));
    std::fill(weights.begin() + m.offsets()[r], weights.begin() + m.offsets()[r + 1], w);
  }
  return WeightedCsr(m, std::move(weights));
}

Matrix spmv_block(const NormalizedAdjacency& adj, const Matrix& features) {
  return adj.matrix().multiply(features);
}

}  // namespace bunca
