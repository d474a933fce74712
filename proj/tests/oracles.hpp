// Dense and brute-force reference implementations. Deliberately naive: plain
// loops over dense matrices, no sharing with the library's sparse kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "bunca/sparse.hpp"
#include "bunca/types.hpp"

namespace oracle {

using bunca::Index;
using bunca::Matrix;

inline Matrix dense(const bunca::SparseBinaryMatrix& m) {
  Matrix d = Matrix::Zero(m.rows(), m.cols());
  for (const auto& [r, c] : m.pairs()) d(r, c) = 1.0;
  return d;
}

// 1/sqrt(deg deg) weighting of a symmetric 0/1 adjacency.
inline Matrix normalized(const Matrix& adj) {
  const Index n = adj.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (adj(i, j) == 0.0) continue;
      const double di = adj.row(i).sum();
      const double dj = adj.row(j).sum();
      out(i, j) = 1.0 / std::sqrt(di * dj);
    }
  }
  return out;
}

// [[0, M], [M^T, 0]].
inline Matrix bipartite(const Matrix& m) {
  const Index r = m.rows(), c = m.cols();
  Matrix a = Matrix::Zero(r + c, r + c);
  a.block(0, r, r, c) = m;
  a.block(r, 0, c, r) = m.transpose();
  return a;
}

// Off-diagonal co-occurrence with at least `threshold` shared neighbors.
inline Matrix cooccur(const Matrix& m, bool rows, std::int64_t threshold = 1) {
  const Matrix c = rows ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
  Matrix out = Matrix::Zero(c.rows(), c.cols());
  for (Index i = 0; i < c.rows(); ++i) {
    for (Index j = 0; j < c.cols(); ++j) {
      if (i != j && c(i, j) >= static_cast<double>(threshold)) out(i, j) = 1.0;
    }
  }
  return out;
}

inline Matrix unified(const Matrix& x) {
  const Index u = x.rows(), b = x.cols();
  Matrix a = Matrix::Zero(u + b, u + b);
  a.block(0, 0, u, u) = cooccur(x, true);
  a.block(u, u, b, b) = cooccur(x, false);
  a.block(0, u, u, b) = x;
  a.block(u, 0, b, u) = x.transpose();
  return a;
}

// sum_{h=0..layers} A^h x.
inline Matrix propagate_sum(const Matrix& a, const Matrix& x, int layers) {
  Matrix cur = x;
  Matrix total = x;
  for (int h = 0; h < layers; ++h) {
    Matrix next = Matrix::Zero(cur.rows(), cur.cols());
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < a.cols(); ++j) {
        if (a(i, j) != 0.0) next.row(i) += a(i, j) * cur.row(j);
      }
    }
    cur = next;
    total += cur;
  }
  return total;
}

inline Matrix row_mean(const Matrix& m, const Matrix& x) {
  Matrix out = Matrix::Zero(m.rows(), x.cols());
  for (Index r = 0; r < m.rows(); ++r) {
    double n = 0.0;
    for (Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) != 0.0) {
        out.row(r) += x.row(c);
        n += 1.0;
      }
    }
    if (n > 0.0) out.row(r) /= n;
  }
  return out;
}

inline bunca::SparseBinaryMatrix random_binary(Index rows, Index cols, double p, std::mt19937_64& gen) {
  std::bernoulli_distribution coin(p);
  std::vector<std::pair<Index, Index>> pairs;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (coin(gen)) pairs.emplace_back(r, c);
    }
  }
  return bunca::SparseBinaryMatrix::from_pairs(rows, cols, std::move(pairs));
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& gen, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
  return m;
}

struct UserMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
};

// Sorts every unmasked bundle by (score desc, id asc) and applies the
// definitions directly.
inline UserMetrics brute_force_metrics(const std::vector<double>& scores, const std::set<Index>& masked,
                                       const std::set<Index>& test, Index k) {
  std::vector<std::pair<double, Index>> order;
  for (Index b = 0; b < static_cast<Index>(scores.size()); ++b) {
    if (!masked.count(b)) order.emplace_back(-scores[b], b);
  }
  std::sort(order.begin(), order.end());
  UserMetrics m;
  double hits = 0.0, dcg = 0.0, idcg = 0.0;
  for (Index pos = 0; pos < k && pos < static_cast<Index>(order.size()); ++pos) {
    if (test.count(order[pos].second)) {
      hits += 1.0;
      dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    }
  }
  for (Index pos = 0; pos < std::min<Index>(k, static_cast<Index>(test.size())); ++pos) {
    idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  }
  m.recall = hits / static_cast<double>(test.size());
  m.ndcg = dcg / idcg;
  return m;
}

inline double leaky(double x, double slope) { return x >= 0.0 ? x : slope * x; }

// Dense causation weights for one prospect: A(i, j) on the mask's support.
inline Matrix causation(const Matrix& items, const Matrix& p, const Matrix& psi_src, const Matrix& psi_dst,
                        const Matrix& phi, const Matrix& mask, double slope, double eps) {
  const Index n = items.rows();
  Matrix e = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (mask(i, j) == 0.0) continue;
      Matrix h = psi_src * items.row(j).transpose() + psi_dst * items.row(i).transpose() + phi.transpose();
      double r = 0.0;
      for (Index k = 0; k < h.rows(); ++k) r += p(k, 0) * leaky(h(k, 0), slope);
      e(i, j) = std::exp(r);
    }
  }
  for (Index i = 0; i < n; ++i) {
    const double s = e.row(i).sum();
    if (s > 0.0) e.row(i) /= std::max(s, eps);
  }
  return e;
}

}  // namespace oracle
