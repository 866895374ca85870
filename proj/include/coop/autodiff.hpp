#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

// Minimal tape-based reverse-mode differentiation over dense matrices. Just
// enough operators for attention, feed-forward blocks and log-space Sinkhorn.

namespace coop::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Called with the gradient flowing into the node; adds into parents.
  using Backprop = std::function<void(Tape&, const Matrix&)>;

  Var constant(Matrix value);
  Var parameter(Matrix value);
  Var record(Matrix value, std::initializer_list<Var> parents, Backprop backprop);
  Var record(Matrix value, std::span<const Var> parents, Backprop backprop);

  /// Seeds d(output)/d(output) = 1 for a 1×1 node and sweeps the tape backwards.
  void backward(Var output);

  const Matrix& value(const Var& v) const { return nodes_[v.id_].value; }
  const Matrix& grad(const Var& v) const { return nodes_[v.id_].grad; }
  bool needs_grad(const Var& v) const { return nodes_[v.id_].needs_grad; }

  /// grad(v) += g, skipped for nodes that no parameter depends on.
  void accumulate(const Var& v, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backprop backprop;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
/// a · bᵀ
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Adds a 1×c row to every row of a.
Var add_row(Var a, Var row);
/// Adds an r×1 column to every column of a.
Var add_col(Var a, Var col);
Var scale(Var a, double s);
Var cmul(Var a, Var b);
Var transpose(Var a);
Var gelu(Var a);
Var log_sigmoid(Var a);
Var positive_part(Var a);
Var softmax_rows(Var a);
/// r×1 column of per-row log-sum-exp.
Var logsumexp_rows(Var a);
/// 1×c row of per-column log-sum-exp.
Var logsumexp_cols(Var a);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
/// out(i, j) = q.row(i) · r.row(i * m + j) where m = r.rows() / q.rows().
Var pair_dot(Var q, Var r);
/// k×1 column of a(i, j) for each listed (i, j).
Var gather(Var a, std::span<const std::pair<int, int>> cells);
Var sum(Var a);

}  // namespace coop::ad
