#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bunca/sparse.hpp"
#include "bunca/types.hpp"

namespace bunca {

class Tensor;

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;
};

}  // namespace detail

// Dense matrix value with an optional reverse-mode gradient slot. Copies of a
// Tensor share the same node; results of ops record their inputs so that
// backward() can walk the graph.
class Tensor {
 public:
  using BackwardFn = std::function<void(const Matrix& grad_out, std::span<const Tensor> inputs)>;

  Tensor();
  explicit Tensor(Matrix value, bool requires_grad = false);

  // Leaf that accumulates gradients.
  static Tensor parameter(Matrix value) { return Tensor(std::move(value), true); }

  // Builds an op result. backward receives d(loss)/d(result) and must call
  // accumulate_grad on the inputs that require gradients.
  static Tensor from_op(Matrix value, std::vector<Tensor> inputs, BackwardFn backward,
                        const char* op_name);

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0 || node_->value.size() == 0; }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->parents.empty(); }

  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  double item() const;

  void accumulate_grad(const Matrix& g) const;
  void zero_grad() const;
  // Allocates a zero gradient slot if none exists yet.
  void ensure_grad() const;

  // Reverse sweep from a 1x1 tensor. Leaf gradients accumulate across calls;
  // intermediate gradients are recomputed each call.
  void backward() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Forward ops. Each throws DimensionError on shape mismatch and NumericalError
// if a result contains NaN or Inf.
namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Fixed sparse operator times dense input. The gradient reaches only the
// dense operand; the operator must outlive the backward pass.
Tensor spmm(const WeightedCsr& op, const Tensor& x);
inline Tensor spmm(const NormalizedAdjacency& adj, const Tensor& x) { return spmm(adj.matrix(), x); }
// Row-wise mean over an index set, expressed as a row_mean_operator.
inline Tensor mean_pool(const WeightedCsr& pool, const Tensor& x) { return spmm(pool, x); }

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
// a (n x d) plus a 1 x d row added to every row.
Tensor add_row(const Tensor& a, const Tensor& row);

// [a | b] along the feature axis.
Tensor concat_cols(const Tensor& a, const Tensor& b);
// a stacked above b.
Tensor vstack(const Tensor& a, const Tensor& b);
Tensor row_slice(const Tensor& a, Index begin, Index count);
Tensor gather_rows(const Tensor& a, std::span<const Index> rows);

Tensor exp(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor softplus(const Tensor& a);

// (n x d), (n x d) -> n x 1 of row inner products.
Tensor row_dot(const Tensor& a, const Tensor& b);
// Row-wise cosine, denominator max(|a||b|, 1e-12).
Tensor cosine_rows(const Tensor& a, const Tensor& b);
// Each row divided by max(|row|, 1e-12).
Tensor normalize_rows(const Tensor& a);
// Pairwise cosine matrix of the rows of a with themselves. The diagonal is
// exactly 1 for nonzero rows (0 for zero rows) and carries no gradient.
Tensor self_cosine(const Tensor& a);
Tensor diagonal(const Tensor& a);
// n x m -> n x 1, computed with the max-shift.
Tensor row_logsumexp(const Tensor& a);

// Masked row normalization over a sparse support. scores holds one value per
// stored entry of support (nnz x 1). Entry (i, j) becomes
// exp(s_ij) / max(sum_j' exp(s_ij'), eps); rows with empty support stay empty.
Tensor edge_softmax(const SparseBinaryMatrix& support, const Tensor& scores, double eps);
// out[i] = sum_j w_ij x[j] with learned per-entry weights (nnz x 1).
Tensor edge_aggregate(const SparseBinaryMatrix& support, const Tensor& weights, const Tensor& x);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor squared_norm(const Tensor& a);

}  // namespace ops

}  // namespace bunca
