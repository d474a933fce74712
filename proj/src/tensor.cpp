#include "bunca/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "bunca/error.hpp"

namespace bunca {

namespace {

constexpr double kNormClamp = 1e-12;

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shapes " + shape(a.value()) + " and " +
                         shape(b.value()) + " differ");
  }
}

}  // namespace

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) {}

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::from_op(Matrix value, std::vector<Tensor> inputs, BackwardFn backward,
                       const char* op_name) {
  if (!value.allFinite()) throw NumericalError(std::string("non-finite value produced by ") + op_name);
  Tensor out(std::move(value), false);
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return out;
  out.node_->requires_grad = true;
  for (const auto& t : inputs) {
    if (t.requires_grad()) out.node_->parents.push_back(t.node_);
  }
  out.node_->backward = [inputs = std::move(inputs), fn = std::move(backward)](detail::Node& self) {
    fn(self.grad, inputs);
  };
  return out;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw DimensionError("item() on non-scalar " + shape(value()));
  return value()(0, 0);
}

void Tensor::accumulate_grad(const Matrix& g) const {
  if (!node_->requires_grad) return;
  if (g.rows() != rows() || g.cols() != cols()) {
    throw DimensionError("gradient shape " + shape(g) + " for value " + shape(value()));
  }
  if (node_->grad.size() == 0) {
    node_->grad = g;
  } else {
    node_->grad += g;
  }
}

void Tensor::zero_grad() const { node_->grad = Matrix::Zero(rows(), cols()); }

void Tensor::ensure_grad() const {
  if (node_->grad.size() == 0) zero_grad();
}

void Tensor::backward() const {
  if (rows() != 1 || cols() != 1) throw DimensionError("backward() needs a scalar loss");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS for a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (auto* n : order) {
    if (!n->parents.empty()) n->grad.resize(0, 0);
  }
  node_->grad = Matrix::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->parents.empty() || n->grad.size() == 0) continue;
    n->backward(*n);
  }
}

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape(a.value()) + " times " + shape(b.value()));
  }
  Matrix v = a.value() * b.value();
  return Tensor::from_op(std::move(v), {a, b}, [](const Matrix& g, std::span<const Tensor> in) {
    if (in[0].requires_grad()) in[0].accumulate_grad(g * in[1].value().transpose());
    if (in[1].requires_grad()) in[1].accumulate_grad(in[0].value().transpose() * g);
  }, "matmul");
}

Tensor transpose(const Tensor& a) {
  Matrix v = a.value().transpose();
  return Tensor::from_op(std::move(v), {a}, [](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(g.transpose());
  }, "transpose");
}

Tensor spmm(const WeightedCsr& op, const Tensor& x) {
  Matrix v = op.multiply(x.value());
  const WeightedCsr* p = &op;
  return Tensor::from_op(std::move(v), {x}, [p](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(p->multiply_transposed(g));
  }, "spmm");
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Matrix v = a.value() + b.value();
  return Tensor::from_op(std::move(v), {a, b}, [](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(g);
    in[1].accumulate_grad(g);
  }, "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Matrix v = a.value() - b.value();
  return Tensor::from_op(std::move(v), {a, b}, [](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(g);
    if (in[1].requires_grad()) in[1].accumulate_grad(-g);
  }, "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Matrix v = a.value().cwiseProduct(b.value());
  return Tensor::from_op(std::move(v), {a, b}, [](const Matrix& g, std::span<const Tensor> in) {
    if (in[0].requires_grad()) in[0].accumulate_grad(g.cwiseProduct(in[1].value()));
    if (in[1].requires_grad()) in[1].accumulate_grad(g.cwiseProduct(in[0].value()));
  }, "mul");
}

Tensor scale(const Tensor& a, double s) {
  Matrix v = a.value() * s;
  return Tensor::from_op(std::move(v), {a}, [s](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(g * s);
  }, "scale");
}

Tensor add_scalar(const Tensor& a, double s) {
  Matrix v = a.value().array() + s;
  return Tensor::from_op(std::move(v), {a}, [](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(g);
  }, "add_scalar");
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_row: row " + shape(row.value()) + " for " + shape(a.value()));
  }
  Matrix v = a.value().rowwise() + row.value().row(0);
  return Tensor::from_op(std::move(v), {a, row}, [](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(g);
    if (in[1].requires_grad()) in[1].accumulate_grad(g.colwise().sum());
  }, "add_row");
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: " + shape(a.value()) + " and " + shape(b.value()));
  }
  Matrix v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  const Index split = a.cols();
  return Tensor::from_op(std::move(v), {a, b}, [split](const Matrix& g, std::span<const Tensor> in) {
    if (in[0].requires_grad()) in[0].accumulate_grad(g.leftCols(split));
    if (in[1].requires_grad()) in[1].accumulate_grad(g.rightCols(g.cols() - split));
  }, "concat_cols");
}

Tensor vstack(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("vstack: " + shape(a.value()) + " and " + shape(b.value()));
  }
  Matrix v(a.rows() + b.rows(), a.cols());
  v << a.value(), b.value();
  const Index split = a.rows();
  return Tensor::from_op(std::move(v), {a, b}, [split](const Matrix& g, std::span<const Tensor> in) {
    if (in[0].requires_grad()) in[0].accumulate_grad(g.topRows(split));
    if (in[1].requires_grad()) in[1].accumulate_grad(g.bottomRows(g.rows() - split));
  }, "vstack");
}

Tensor row_slice(const Tensor& a, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw DimensionError("row_slice outside " + shape(a.value()));
  }
  Matrix v = a.value().middleRows(begin, count);
  return Tensor::from_op(std::move(v), {a}, [begin, count](const Matrix& g, std::span<const Tensor> in) {
    Matrix full = Matrix::Zero(in[0].rows(), in[0].cols());
    full.middleRows(begin, count) = g;
    in[0].accumulate_grad(full);
  }, "row_slice");
}

Tensor gather_rows(const Tensor& a, std::span<const Index> rows) {
  Matrix v(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= a.rows()) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[k]) + " outside " + shape(a.value()));
    }
    v.row(static_cast<Index>(k)) = a.value().row(rows[k]);
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  return Tensor::from_op(std::move(v), {a}, [idx = std::move(idx)](const Matrix& g, std::span<const Tensor> in) {
    Matrix full = Matrix::Zero(in[0].rows(), in[0].cols());
    for (std::size_t k = 0; k < idx.size(); ++k) full.row(idx[k]) += g.row(static_cast<Index>(k));
    in[0].accumulate_grad(full);
  }, "gather_rows");
}

Tensor exp(const Tensor& a) {
  Matrix v = a.value().array().exp();
  Matrix saved = v;
  return Tensor::from_op(std::move(v), {a}, [saved = std::move(saved)](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(g.cwiseProduct(saved));
  }, "exp");
}

Tensor leaky_relu(const Tensor& a, double slope) {
  Matrix v = a.value().unaryExpr([slope](double x) { return x >= 0.0 ? x : slope * x; });
  return Tensor::from_op(std::move(v), {a}, [slope](const Matrix& g, std::span<const Tensor> in) {
    Matrix d = in[0].value().unaryExpr([slope](double x) { return x >= 0.0 ? 1.0 : slope; });
    in[0].accumulate_grad(g.cwiseProduct(d));
  }, "leaky_relu");
}

Tensor softplus(const Tensor& a) {
  Matrix v = a.value().unaryExpr([](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
  return Tensor::from_op(std::move(v), {a}, [](const Matrix& g, std::span<const Tensor> in) {
    Matrix sig = in[0].value().unaryExpr([](double x) {
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    });
    in[0].accumulate_grad(g.cwiseProduct(sig));
  }, "softplus");
}

Tensor row_dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "row_dot");
  Matrix v = a.value().cwiseProduct(b.value()).rowwise().sum();
  return Tensor::from_op(std::move(v), {a, b}, [](const Matrix& g, std::span<const Tensor> in) {
    const auto gcol = g.col(0);
    if (in[0].requires_grad()) in[0].accumulate_grad(in[1].value().array().colwise() * gcol.array());
    if (in[1].requires_grad()) in[1].accumulate_grad(in[0].value().array().colwise() * gcol.array());
  }, "row_dot");
}

Tensor cosine_rows(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "cosine_rows");
  const Index n = a.rows();
  Matrix v(n, 1);
  for (Index r = 0; r < n; ++r) {
    const double denom = a.value().row(r).norm() * b.value().row(r).norm();
    v(r, 0) = a.value().row(r).dot(b.value().row(r)) / std::max(denom, kNormClamp);
  }
  Matrix saved = v;
  return Tensor::from_op(std::move(v), {a, b}, [saved = std::move(saved)](const Matrix& g, std::span<const Tensor> in) {
    const Matrix& av = in[0].value();
    const Matrix& bv = in[1].value();
    Matrix ga = Matrix::Zero(av.rows(), av.cols());
    Matrix gb = Matrix::Zero(bv.rows(), bv.cols());
    for (Index r = 0; r < av.rows(); ++r) {
      const double na = av.row(r).norm();
      const double nb = bv.row(r).norm();
      const double c = saved(r, 0);
      if (na * nb > kNormClamp) {
        ga.row(r) = g(r, 0) * (bv.row(r) / (na * nb) - c * av.row(r) / (na * na));
        gb.row(r) = g(r, 0) * (av.row(r) / (na * nb) - c * bv.row(r) / (nb * nb));
      } else {
        ga.row(r) = g(r, 0) * bv.row(r) / kNormClamp;
        gb.row(r) = g(r, 0) * av.row(r) / kNormClamp;
      }
    }
    in[0].accumulate_grad(ga);
    in[1].accumulate_grad(gb);
  }, "cosine_rows");
}

Tensor normalize_rows(const Tensor& a) {
  Matrix v = a.value();
  for (Index r = 0; r < v.rows(); ++r) v.row(r) /= std::max(v.row(r).norm(), kNormClamp);
  Matrix saved = v;
  return Tensor::from_op(std::move(v), {a}, [saved = std::move(saved)](const Matrix& g, std::span<const Tensor> in) {
    const Matrix& av = in[0].value();
    Matrix ga(av.rows(), av.cols());
    for (Index r = 0; r < av.rows(); ++r) {
      const double norm = av.row(r).norm();
      if (norm > kNormClamp) {
        const double proj = saved.row(r).dot(g.row(r));
        ga.row(r) = (g.row(r) - proj * saved.row(r)) / norm;
      } else {
        ga.row(r) = g.row(r) / kNormClamp;
      }
    }
    in[0].accumulate_grad(ga);
  }, "normalize_rows");
}

Tensor self_cosine(const Tensor& a) {
  const Tensor n = normalize_rows(a);
  const Tensor sim = matmul(n, transpose(n));
  Matrix v = sim.value();
  for (Index r = 0; r < v.rows(); ++r) v(r, r) = a.value().row(r).norm() > kNormClamp ? 1.0 : 0.0;
  return Tensor::from_op(std::move(v), {sim}, [](const Matrix& g, std::span<const Tensor> in) {
    Matrix off = g;
    off.diagonal().setZero();
    in[0].accumulate_grad(off);
  }, "self_cosine");
}

Tensor diagonal(const Tensor& a) {
  if (a.rows() != a.cols()) throw DimensionError("diagonal of non-square " + shape(a.value()));
  Matrix v = a.value().diagonal();
  return Tensor::from_op(std::move(v), {a}, [](const Matrix& g, std::span<const Tensor> in) {
    Matrix full = Matrix::Zero(in[0].rows(), in[0].cols());
    full.diagonal() = g.col(0);
    in[0].accumulate_grad(full);
  }, "diagonal");
}

Tensor row_logsumexp(const Tensor& a) {
  if (a.cols() == 0) throw DimensionError("row_logsumexp over zero columns");
  const Index n = a.rows();
  Matrix v(n, 1);
  Matrix soft(n, a.cols());
  for (Index r = 0; r < n; ++r) {
    const double m = a.value().row(r).maxCoeff();
    soft.row(r) = (a.value().row(r).array() - m).exp();
    const double s = soft.row(r).sum();
    v(r, 0) = m + std::log(s);
    soft.row(r) /= s;
  }
  return Tensor::from_op(std::move(v), {a}, [soft = std::move(soft)](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(soft.array().colwise() * g.col(0).array());
  }, "row_logsumexp");
}

Tensor edge_softmax(const SparseBinaryMatrix& support, const Tensor& scores, double eps) {
  if (scores.rows() != support.nnz() || scores.cols() != 1) {
    throw DimensionError("edge_softmax: " + shape(scores.value()) + " scores for " +
                         std::to_string(support.nnz()) + " entries");
  }
  if (!(eps > 0.0)) throw DimensionError("edge_softmax: eps must be positive");
  const auto& offsets = support.offsets();
  Matrix v(support.nnz(), 1);
  std::vector<char> clamped(static_cast<std::size_t>(support.rows()), 0);
  for (Index r = 0; r < support.rows(); ++r) {
    const Index lo = offsets[r];
    const Index hi = offsets[r + 1];
    if (lo == hi) continue;
    const double m = scores.value().middleRows(lo, hi - lo).maxCoeff();
    double s = 0.0;
    for (Index k = lo; k < hi; ++k) {
      v(k, 0) = std::exp(scores.value()(k, 0) - m);
      s += v(k, 0);
    }
    // max(sum exp(s), eps) evaluated in the shifted frame
    const double floor = eps * std::exp(-m);
    if (floor > s) {
      clamped[r] = 1;
      s = floor;
    }
    for (Index k = lo; k < hi; ++k) v(k, 0) /= s;
  }
  Matrix saved = v;
  const SparseBinaryMatrix* sp = &support;
  return Tensor::from_op(std::move(v), {scores},
      [sp, saved = std::move(saved), clamped = std::move(clamped)](const Matrix& g, std::span<const Tensor> in) {
        const auto& off = sp->offsets();
        Matrix gs(saved.rows(), 1);
        for (Index r = 0; r < sp->rows(); ++r) {
          const Index lo = off[r];
          const Index hi = off[r + 1];
          double dot = 0.0;
          if (!clamped[r]) {
            for (Index k = lo; k < hi; ++k) dot += saved(k, 0) * g(k, 0);
          }
          for (Index k = lo; k < hi; ++k) gs(k, 0) = saved(k, 0) * (g(k, 0) - dot);
        }
        in[0].accumulate_grad(gs);
      }, "edge_softmax");
}

Tensor edge_aggregate(const SparseBinaryMatrix& support, const Tensor& weights, const Tensor& x) {
  if (weights.rows() != support.nnz() || weights.cols() != 1) {
    throw DimensionError("edge_aggregate: " + shape(weights.value()) + " weights for " +
                         std::to_string(support.nnz()) + " entries");
  }
  if (x.rows() != support.cols()) {
    throw DimensionError("edge_aggregate: features " + shape(x.value()) + " for support with " +
                         std::to_string(support.cols()) + " columns");
  }
  const auto& offsets = support.offsets();
  const auto& cols = support.indices();
  Matrix v = Matrix::Zero(support.rows(), x.cols());
  for (Index r = 0; r < support.rows(); ++r) {
    for (Index k = offsets[r]; k < offsets[r + 1]; ++k) {
      v.row(r).noalias() += weights.value()(k, 0) * x.value().row(cols[k]);
    }
  }
  const SparseBinaryMatrix* sp = &support;
  return Tensor::from_op(std::move(v), {weights, x}, [sp](const Matrix& g, std::span<const Tensor> in) {
    const auto& off = sp->offsets();
    const auto& idx = sp->indices();
    const Matrix& w = in[0].value();
    const Matrix& xv = in[1].value();
    if (in[0].requires_grad()) {
      Matrix gw(w.rows(), 1);
      for (Index r = 0; r < sp->rows(); ++r) {
        for (Index k = off[r]; k < off[r + 1]; ++k) gw(k, 0) = g.row(r).dot(xv.row(idx[k]));
      }
      in[0].accumulate_grad(gw);
    }
    if (in[1].requires_grad()) {
      Matrix gx = Matrix::Zero(xv.rows(), xv.cols());
      for (Index r = 0; r < sp->rows(); ++r) {
        for (Index k = off[r]; k < off[r + 1]; ++k) gx.row(idx[k]).noalias() += w(k, 0) * g.row(r);
      }
      in[1].accumulate_grad(gx);
    }
  }, "edge_aggregate");
}

Tensor sum(const Tensor& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return Tensor::from_op(std::move(v), {a}, [](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(Matrix::Constant(in[0].rows(), in[0].cols(), g(0, 0)));
  }, "sum");
}

Tensor mean(const Tensor& a) {
  if (a.value().size() == 0) throw DimensionError("mean of empty tensor");
  const double n = static_cast<double>(a.value().size());
  Matrix v(1, 1);
  v(0, 0) = a.value().sum() / n;
  return Tensor::from_op(std::move(v), {a}, [n](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(Matrix::Constant(in[0].rows(), in[0].cols(), g(0, 0) / n));
  }, "mean");
}

Tensor squared_norm(const Tensor& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().squaredNorm();
  return Tensor::from_op(std::move(v), {a}, [](const Matrix& g, std::span<const Tensor> in) {
    in[0].accumulate_grad(2.0 * g(0, 0) * in[0].value());
  }, "squared_norm");
}

}  // namespace ops

}  // namespace bunca
