#include "coop/autodiff.hpp"

#include <cmath>
#include <numbers>

#include "coop/error.hpp"

namespace coop::ad {

const Matrix& Var::value() const { return tape_->value(*this); }
const Matrix& Var::grad() const { return tape_->grad(*this); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, false});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, true});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backprop backprop) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backprop));
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backprop backprop) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || nodes_[p.id_].needs_grad;
  nodes_.push_back(Node{std::move(value), Matrix(), needs ? std::move(backprop) : nullptr, needs});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(const Var& v, const Matrix& g) {
  Node& n = nodes_[v.id_];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var output) {
  require(output.tape_ == this, ErrorKind::InvalidArgument, "output belongs to another tape");
  require(value(output).size() == 1, ErrorKind::DimensionMismatch, "backward needs a scalar output");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  accumulate(output, Matrix::Ones(1, 1));
  for (int i = output.id_; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.backprop || n.grad.size() == 0) continue;
    n.backprop(*this, n.grad);
  }
  // Parameters that received no gradient still report a zero gradient.
  for (Node& n : nodes_) {
    if (n.needs_grad && n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
}

namespace {

void same_shape(const Var& a, const Var& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::DimensionMismatch,
          std::string(op) + ": operand shapes differ");
}

Matrix log_sigmoid_value(const Matrix& x) {
  return x.unaryExpr([](double v) { return v >= 0.0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v)); });
}

Matrix row_lse(const Matrix& a) {
  Matrix out(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double m = a.row(i).maxCoeff();
    out(i, 0) = std::isinf(m) ? m : m + std::log((a.row(i).array() - m).exp().sum());
  }
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), ErrorKind::DimensionMismatch, "matmul: inner dimensions differ");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.needs_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  require(a.cols() == b.cols(), ErrorKind::DimensionMismatch, "matmul_nt: inner dimensions differ");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value().transpose(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value());
    if (t.needs_grad(b)) t.accumulate(b, g.transpose() * a.value());
  });
}

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  return a.tape()->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  same_shape(a, b, "sub");
  return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), ErrorKind::DimensionMismatch,
          "add_row: row must be 1×cols");
  Matrix v = a.value().rowwise() + row.value().row(0);
  return a.tape()->record(std::move(v), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var add_col(Var a, Var col) {
  require(col.cols() == 1 && col.rows() == a.rows(), ErrorKind::DimensionMismatch,
          "add_col: column must be rows×1");
  Matrix v = a.value().colwise() + col.value().col(0);
  return a.tape()->record(std::move(v), {a, col}, [a, col](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(col)) t.accumulate(col, g.rowwise().sum());
  });
}

Var scale(Var a, double s) {
  return a.tape()->record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var cmul(Var a, Var b) {
  same_shape(a, b, "cmul");
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var transpose(Var a) {
  return a.tape()->record(a.value().transpose(), {a},
                          [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Var gelu(Var a) {
  const Matrix v = a.value().unaryExpr(
      [](double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); });
  return a.tape()->record(v, {a}, [a](Tape& t, const Matrix& g) {
    const Matrix d = a.value().unaryExpr([](double x) {
      const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
      const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
      return cdf + x * pdf;
    });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var log_sigmoid(Var a) {
  return a.tape()->record(log_sigmoid_value(a.value()), {a}, [a](Tape& t, const Matrix& g) {
    // d/dx log σ(x) = σ(-x)
    const Matrix s = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(x)); });
    t.accumulate(a, g.cwiseProduct(s));
  });
}

Var positive_part(Var a) {
  const Matrix v = a.value().cwiseMax(0.0);
  return a.tape()->record(v, {a}, [a](Tape& t, const Matrix& g) {
    const Matrix mask = (a.value().array() > 0.0).cast<double>().matrix();
    t.accumulate(a, g.cwiseProduct(mask));
  });
}

Var softmax_rows(Var a) {
  Matrix y = a.value();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double m = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - m).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  return a.tape()->record(y, {a}, [a, y](Tape& t, const Matrix& g) {
    const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    t.accumulate(a, y.cwiseProduct(g - dot.replicate(1, g.cols())));
  });
}

Var logsumexp_rows(Var a) {
  Matrix l = row_lse(a.value());
  return a.tape()->record(l, {a}, [a, l](Tape& t, const Matrix& g) {
    const Matrix p = (a.value().colwise() - l.col(0)).array().exp().matrix();
    t.accumulate(a, p.cwiseProduct(g.col(0).replicate(1, p.cols())));
  });
}

Var logsumexp_cols(Var a) {
  Matrix l = row_lse(a.value().transpose()).transpose();
  return a.tape()->record(l, {a}, [a, l](Tape& t, const Matrix& g) {
    const Matrix p = (a.value().rowwise() - l.row(0)).array().exp().matrix();
    t.accumulate(a, p.cwiseProduct(g.row(0).replicate(p.rows(), 1)));
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), ErrorKind::InvalidArgument, "concat_rows: no parts");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, ErrorKind::DimensionMismatch, "concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix v(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return parts.front().tape()->record(std::move(v), parts, [keep](Tape& t, const Matrix& g) {
    Eigen::Index r = 0;
    for (const Var& p : keep) {
      if (t.needs_grad(p)) t.accumulate(p, g.middleRows(r, p.rows()));
      r += p.rows();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), ErrorKind::InvalidArgument, "concat_cols: no parts");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, ErrorKind::DimensionMismatch, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return parts.front().tape()->record(std::move(v), parts, [keep](Tape& t, const Matrix& g) {
    Eigen::Index c = 0;
    for (const Var& p : keep) {
      if (t.needs_grad(p)) t.accumulate(p, g.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= a.rows(), ErrorKind::DimensionMismatch,
          "slice_rows: range out of bounds");
  return a.tape()->record(a.value().middleRows(begin, count), {a},
                          [a, begin, count](Tape& t, const Matrix& g) {
                            Matrix full = Matrix::Zero(a.rows(), a.cols());
                            full.middleRows(begin, count) = g;
                            t.accumulate(a, full);
                          });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= a.cols(), ErrorKind::DimensionMismatch,
          "slice_cols: range out of bounds");
  return a.tape()->record(a.value().middleCols(begin, count), {a},
                          [a, begin, count](Tape& t, const Matrix& g) {
                            Matrix full = Matrix::Zero(a.rows(), a.cols());
                            full.middleCols(begin, count) = g;
                            t.accumulate(a, full);
                          });
}

Var pair_dot(Var q, Var r) {
  const Eigen::Index n = q.rows();
  require(n > 0 && r.rows() % n == 0 && r.cols() == q.cols(), ErrorKind::DimensionMismatch,
          "pair_dot: r must be (n*m)×k for q of n×k");
  const Eigen::Index m = r.rows() / n;
  Matrix v(n, m);
  for (Eigen::Index i = 0; i < n; ++i) v.row(i) = (r.value().middleRows(i * m, m) * q.value().row(i).transpose()).transpose();
  return q.tape()->record(std::move(v), {q, r}, [q, r, n, m](Tape& t, const Matrix& g) {
    if (t.needs_grad(q)) {
      Matrix gq(n, q.cols());
      for (Eigen::Index i = 0; i < n; ++i) gq.row(i) = g.row(i) * r.value().middleRows(i * m, m);
      t.accumulate(q, gq);
    }
    if (t.needs_grad(r)) {
      Matrix gr(r.rows(), r.cols());
      for (Eigen::Index i = 0; i < n; ++i) gr.middleRows(i * m, m) = g.row(i).transpose() * q.value().row(i);
      t.accumulate(r, gr);
    }
  });
}

Var gather(Var a, std::span<const std::pair<int, int>> cells) {
  Matrix v(static_cast<Eigen::Index>(cells.size()), 1);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto [i, j] = cells[k];
    require(i >= 0 && j >= 0 && i < a.rows() && j < a.cols(), ErrorKind::IndexMismatch,
            "gather: cell out of bounds");
    v(static_cast<Eigen::Index>(k), 0) = a.value()(i, j);
  }
  std::vector<std::pair<int, int>> keep(cells.begin(), cells.end());
  return a.tape()->record(std::move(v), {a}, [a, keep](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t k = 0; k < keep.size(); ++k) full(keep[k].first, keep[k].second) += g(static_cast<Eigen::Index>(k), 0);
    t.accumulate(a, full);
  });
}

Var sum(Var a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return a.tape()->record(std::move(v), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

}  // namespace coop::ad
