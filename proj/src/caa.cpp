#include "coop/caa.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "coop/autodiff.hpp"
#include "coop/error.hpp"
#include "coop/random.hpp"
#include "coop/text.hpp"

namespace coop {

namespace {

using ad::Tape;
using ad::Var;
using Eigen::Index;
using Eigen::MatrixXd;
using ParamVars = CaaParamsT<Var>;

bool is_bias(const std::string& name) {
  return name.ends_with("bias") || name.ends_with(".b1") || name.ends_with(".b2");
}

template <class T>
CaaParamsT<T> shaped_like(const CaaParams& p) {
  CaaParamsT<T> out;
  out.layers = p.layers;
  out.dim = p.dim;
  out.heads = p.heads;
  out.layer.resize(p.layer.size());
  return out;
}

ParamVars bind(Tape& tape, const CaaParams& params, bool trainable) {
  ParamVars vars = shaped_like<Var>(params);
  for_each_tensor(
      [&](const std::string&, const MatrixXd& m, Var& v) {
        v = trainable ? tape.parameter(m) : tape.constant(m);
      },
      params, vars);
  return vars;
}

MatrixXd relative_features(const MatrixXd& positions, double scale) {
  const Index n = positions.rows();
  MatrixXd f(n * n, 4);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Eigen::RowVector3d d = (positions.row(j) - positions.row(i)) / scale;
      f.row(i * n + j) << d, d.norm();
    }
  }
  return f;
}

Var dense(Var x, Var weight, Var bias) { return ad::add_row(ad::matmul(x, weight), bias); }

Var attention(const AttentionT<Var>& w, Var x, int heads, const Var* relative) {
  const Var q = ad::matmul(x, w.query);
  const Var k = ad::matmul(x, w.key);
  const Var v = ad::matmul(x, w.value);
  const Index dh = q.cols() / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  for (int h = 0; h < heads; ++h) {
    const auto part = [&](Var m) { return heads == 1 ? m : ad::slice_cols(m, h * dh, dh); };
    const Var qh = part(q);
    Var logits = ad::scale(ad::matmul_nt(qh, part(k)), inv);
    if (relative) logits = ad::add(logits, ad::scale(ad::pair_dot(qh, part(*relative)), inv));
    outs.push_back(ad::matmul(ad::softmax_rows(logits), part(v)));
  }
  const Var o = heads == 1 ? outs.front() : ad::concat_cols(outs);
  return ad::matmul(o, w.output);
}

Var encode_positions(const PositionEncoderT<Var>& w, Var features) {
  return dense(ad::gelu(dense(features, w.hidden_weight, w.hidden_bias)), w.output_weight, w.output_bias);
}

Var feed_forward(const FeedForwardT<Var>& w, Var x) {
  return dense(ad::gelu(dense(x, w.w1, w.b1)), w.w2, w.b2);
}

struct Refinement {
  std::vector<Var> sets;  // ego first, then each coop agent
  Index pool = 0;
};

void check_sets(const CaaParams& params, const QuerySet& ego, std::span<const QuerySet> coop) {
  const auto check = [&](const QuerySet& s) {
    require(s.descriptors.rows() == 0 || s.descriptors.cols() == params.dim, ErrorKind::DimensionMismatch,
            "descriptor dimension " + std::to_string(s.descriptors.cols()) + " does not match network dim " +
                std::to_string(params.dim));
    require(s.positions.rows() == s.descriptors.rows() && (s.positions.rows() == 0 || s.positions.cols() == 3),
            ErrorKind::DimensionMismatch, "query positions must be n×3 matching the descriptors");
  };
  check(ego);
  for (const QuerySet& s : coop) check(s);
  require(!coop.empty(), ErrorKind::InvalidArgument, "at least one cooperative query set is required");
}

Refinement refine(Tape& tape, const ParamVars& w, const CaaParams& params, const QuerySet& ego,
                  std::span<const QuerySet> coop, const CaaOptions& options) {
  std::vector<const QuerySet*> sets{&ego};
  for (const QuerySet& s : coop) sets.push_back(&s);

  Refinement r;
  std::vector<Var> relative(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    MatrixXd desc = sets[s]->size() == 0 ? MatrixXd(0, params.dim) : sets[s]->descriptors;
    r.sets.push_back(tape.constant(std::move(desc)));
    if (sets[s]->size() > 0 && params.layers > 0) {
      relative[s] = tape.constant(relative_features(sets[s]->positions, options.position_scale));
    }
    r.pool += sets[s]->size();
  }

  for (std::size_t l = 0; l < w.layer.size(); ++l) {
    const CaaLayerT<Var>& layer = w.layer[l];
    for (std::size_t s = 0; s < sets.size(); ++s) {
      if (sets[s]->size() == 0) continue;
      const Var rel = encode_positions(layer.position, relative[s]);
      r.sets[s] = ad::add(r.sets[s], attention(layer.intra, r.sets[s], params.heads, &rel));
    }
    std::vector<Var> present;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      if (sets[s]->size() > 0) present.push_back(r.sets[s]);
    }
    if (present.empty()) continue;
    Var all = ad::concat_rows(present);
    all = ad::add(all, attention(layer.inter, all, params.heads, nullptr));
    all = ad::add(all, feed_forward(layer.ffn, all));
    Index offset = 0;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      if (sets[s]->size() == 0) continue;
      r.sets[s] = ad::slice_rows(all, offset, sets[s]->size());
      offset += sets[s]->size();
    }
  }
  return r;
}

Var log_sinkhorn_var(Var z, int iters) {
  const bool rows_exact = z.rows() <= z.cols();
  const bool cols_exact = z.cols() <= z.rows();
  for (int it = 0; it < iters; ++it) {
    const Var lr = ad::logsumexp_rows(z);
    z = ad::add_col(z, ad::scale(rows_exact ? lr : ad::positive_part(lr), -1.0));
    const Var lc = ad::logsumexp_cols(z);
    z = ad::add_row(z, ad::scale(cols_exact ? lc : ad::positive_part(lc), -1.0));
  }
  return z;
}

struct PairGraph {
  Var affinity;
  Var log_assignment;
  Var log_scores;
};

struct ScoreGraph {
  Refinement refinement;
  Var ego_logit;
  std::vector<Var> coop_logit;
  std::vector<PairGraph> pairs;  // only for non-empty pairs
  std::vector<bool> has_pair;
};

ScoreGraph build_scores(Tape& tape, const ParamVars& w, const CaaParams& params, const QuerySet& ego,
                        std::span<const QuerySet> coop, const CaaOptions& options) {
  require(options.temperature > 0.0, ErrorKind::InvalidArgument, "temperature must be positive");
  require(options.sinkhorn_iters >= 1, ErrorKind::InvalidArgument, "sinkhorn_iters must be ≥ 1");
  require(options.position_scale > 0.0, ErrorKind::InvalidArgument, "position_scale must be positive");
  ScoreGraph g;
  g.refinement = refine(tape, w, params, ego, coop, options);
  const Var x_ego = g.refinement.sets[0];
  g.ego_logit = dense(x_ego, w.ego_head.weight, w.ego_head.bias);
  const Var log_sig_ego_row = ad::transpose(ad::log_sigmoid(g.ego_logit));
  for (std::size_t i = 0; i < coop.size(); ++i) {
    const Var x_coop = g.refinement.sets[i + 1];
    g.coop_logit.push_back(dense(x_coop, w.coop_head.weight, w.coop_head.bias));
    const bool nonempty = x_coop.rows() > 0 && x_ego.rows() > 0;
    g.has_pair.push_back(nonempty);
    if (!nonempty) {
      g.pairs.push_back({});
      continue;
    }
    PairGraph pg;
    pg.affinity = ad::matmul_nt(x_coop, x_ego);
    pg.log_assignment = log_sinkhorn_var(ad::scale(pg.affinity, 1.0 / options.temperature), options.sinkhorn_iters);
    pg.log_scores = ad::add_row(ad::add_col(pg.log_assignment, ad::log_sigmoid(g.coop_logit.back())), log_sig_ego_row);
    g.pairs.push_back(pg);
  }
  return g;
}

Eigen::VectorXd sigmoid(const MatrixXd& logits) {
  if (logits.size() == 0) return Eigen::VectorXd(0);
  return logits.col(0).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

struct LossGraph {
  Var total;
  LossBreakdown breakdown;
  bool empty = true;
};

LossGraph build_loss(Tape& tape, const ScoreGraph& g, const TrainingExample& example,
                     const LossWeights& weights) {
  LossGraph out;
  std::vector<Var> nll_parts;
  std::size_t n_pairs = 0;
  std::vector<double> ego_target(static_cast<std::size_t>(example.ego.size()), 0.0);
  std::vector<std::vector<double>> coop_target(example.coop.size());
  for (std::size_t i = 0; i < example.coop.size(); ++i) {
    coop_target[i].assign(static_cast<std::size_t>(example.coop[i].size()), 0.0);
    for (const auto& [u, x] : example.pairs[i]) {
      coop_target[i][static_cast<std::size_t>(u)] = 1.0;
      ego_target[static_cast<std::size_t>(x)] = 1.0;
    }
    if (!example.pairs[i].empty()) {
      nll_parts.push_back(ad::gather(g.pairs[i].log_scores, example.pairs[i]));
      n_pairs += example.pairs[i].size();
    }
  }

  std::vector<Var> bce_parts;
  std::size_t n_queries = 0;
  const auto bce_term = [&](Var logit, const std::vector<double>& target) {
    if (target.empty()) return;
    const MatrixXd t = Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Index>(target.size()));
    const Var pos = ad::cmul(ad::log_sigmoid(logit), tape.constant(t));
    const Var neg = ad::cmul(ad::log_sigmoid(ad::scale(logit, -1.0)), tape.constant(MatrixXd::Ones(t.rows(), 1) - t));
    bce_parts.push_back(ad::sum(ad::add(pos, neg)));
    n_queries += target.size();
  };
  bce_term(g.ego_logit, ego_target);
  for (std::size_t i = 0; i < example.coop.size(); ++i) bce_term(g.coop_logit[i], coop_target[i]);

  std::vector<Var> terms;
  if (!nll_parts.empty()) {
    const Var nll = ad::scale(ad::sum(ad::concat_rows(nll_parts)), -weights.nll / static_cast<double>(n_pairs));
    out.breakdown.nll = nll.value()(0, 0);
    terms.push_back(nll);
  }
  if (!bce_parts.empty()) {
    const Var bce = ad::scale(ad::sum(ad::concat_rows(bce_parts)), -weights.bce / static_cast<double>(n_queries));
    out.breakdown.bce = bce.value()(0, 0);
    terms.push_back(bce);
  }
  if (!terms.empty()) {
    out.total = terms.size() == 1 ? terms[0] : ad::add(terms[0], terms[1]);
    out.empty = false;
  }
  out.breakdown.total = out.breakdown.nll + out.breakdown.bce;
  return out;
}

void write_i64(std::ostream& out, std::int64_t v) {
  static_assert(std::endian::native == std::endian::little, "parameter files assume a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::int64_t read_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(ErrorKind::IoFailure, "truncated parameter header");
  return v;
}

constexpr char kParamsMagic[8] = {'C', 'O', 'O', 'P', 'C', 'A', 'A', '1'};

}  // namespace

CaaParams zero_caa(int layers, int dim, int heads) {
  require(layers >= 0, ErrorKind::InvalidArgument, "layers must be non-negative");
  require(dim > 0, ErrorKind::InvalidArgument, "dim must be positive");
  require(heads > 0 && dim % heads == 0, ErrorKind::InvalidArgument, "heads must divide dim");
  CaaParams p;
  p.layers = layers;
  p.dim = dim;
  p.heads = heads;
  const auto z = [](Index r, Index c) { return MatrixXd::Zero(r, c); };
  for (int l = 0; l < layers; ++l) {
    CaaLayerT<MatrixXd> layer;
    for (AttentionT<MatrixXd>* a : {&layer.intra, &layer.inter}) {
      a->query = z(dim, dim);
      a->key = z(dim, dim);
      a->value = z(dim, dim);
      a->output = z(dim, dim);
    }
    layer.position = {z(4, dim), z(1, dim), z(dim, dim), z(1, dim)};
    layer.ffn = {z(dim, 4 * dim), z(1, 4 * dim), z(4 * dim, dim), z(1, dim)};
    p.layer.push_back(std::move(layer));
  }
  p.ego_head = {z(dim, 1), z(1, 1)};
  p.coop_head = {z(dim, 1), z(1, 1)};
  return p;
}

CaaParams initialize_caa(int layers, int dim, int heads, std::uint64_t seed) {
  CaaParams p = zero_caa(layers, dim, heads);
  Rng rng(derive_seed(seed, {0xCAA}));
  for_each_tensor(
      [&](const std::string& name, MatrixXd& m) {
        if (is_bias(name)) {
          m.setZero();
          if (name.ends_with("head.bias")) m.setConstant(1.0);
          return;
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        for (Index i = 0; i < m.rows(); ++i)
          for (Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(rng, -limit, limit);
      },
      p);
  return p;
}

void validate(const CaaParams& params) {
  const CaaParams shape = zero_caa(params.layers, params.dim, params.heads);
  require(params.layer.size() == static_cast<std::size_t>(params.layers), ErrorKind::DimensionMismatch,
          "layer list length does not match layer count");
  for_each_tensor(
      [](const std::string& name, const MatrixXd& m, const MatrixXd& expected) {
        require(m.rows() == expected.rows() && m.cols() == expected.cols(), ErrorKind::DimensionMismatch,
                "tensor " + name + " has the wrong shape");
        require(m.allFinite(), ErrorKind::InvalidArgument, "tensor " + name + " is not finite");
      },
      params, shape);
}

std::size_t parameter_count(const CaaParams& params) {
  std::size_t n = 0;
  for_each_tensor([&](const std::string&, const MatrixXd& m) { n += static_cast<std::size_t>(m.size()); }, params);
  return n;
}

QuerySet make_query_set(std::span<const Query> queries) {
  QuerySet s;
  const Index n = static_cast<Index>(queries.size());
  const Index d = n > 0 ? queries.front().descriptor.size() : 0;
  s.descriptors.resize(n, d);
  s.positions.resize(n, 3);
  for (Index i = 0; i < n; ++i) {
    const Query& q = queries[static_cast<std::size_t>(i)];
    require(q.descriptor.size() == d, ErrorKind::DimensionMismatch, "descriptor dimensions differ within a set");
    s.descriptors.row(i) = q.descriptor.transpose();
    s.positions.row(i) = q.position.transpose();
  }
  return s;
}

RefinedDescriptors caa_refine(const CaaParams& params, const QuerySet& ego, std::span<const QuerySet> coop,
                              const CaaOptions& options) {
  check_sets(params, ego, coop);
  Tape tape;
  const ParamVars w = bind(tape, params, false);
  const Refinement r = refine(tape, w, params, ego, coop, options);
  RefinedDescriptors out;
  out.ego = r.sets[0].value();
  for (std::size_t i = 1; i < r.sets.size(); ++i) out.coop.push_back(r.sets[i].value());
  out.inter_pool_size = r.pool;
  return out;
}

std::vector<PairScores> caa_scores(const CaaParams& params, const QuerySet& ego, std::span<const QuerySet> coop,
                                   const CaaOptions& options) {
  check_sets(params, ego, coop);
  Tape tape;
  const ParamVars w = bind(tape, params, false);
  const ScoreGraph g = build_scores(tape, w, params, ego, coop, options);
  std::vector<PairScores> out;
  for (std::size_t i = 0; i < coop.size(); ++i) {
    PairScores ps;
    ps.ego_matchability = sigmoid(g.ego_logit.value());
    ps.coop_matchability = sigmoid(g.coop_logit[i].value());
    if (g.has_pair[i]) {
      ps.affinity = g.pairs[i].affinity.value();
      ps.assignment = g.pairs[i].log_assignment.value().array().exp().matrix();
      ps.scores = g.pairs[i].log_scores.value().array().exp().matrix();
      if (!ps.scores.allFinite() || !ps.assignment.allFinite()) {
        fail(ErrorKind::NumericalOverflow, "association scores are not finite");
      }
    } else {
      ps.affinity = ps.assignment = ps.scores = MatrixXd(coop[i].size(), ego.size());
    }
    out.push_back(std::move(ps));
  }
  return out;
}

std::vector<MatchResult> caa_match(const CaaParams& params, const QuerySet& ego, std::span<const QuerySet> coop,
                                   const CaaOptions& options) {
  require(options.tau > 0.0 && options.tau < 1.0, ErrorKind::InvalidArgument, "tau must lie in (0, 1)");
  std::vector<MatchResult> out;
  for (const PairScores& ps : caa_scores(params, ego, coop, options)) {
    out.push_back(mutual_nearest_match(ps.scores, options.tau));
  }
  return out;
}

TrainingExample make_training_example(std::span<const Query> ego,
                                      std::span<const std::vector<Query>> coop_in_ego_frame) {
  TrainingExample ex;
  ex.ego = make_query_set(ego);
  for (const auto& set : coop_in_ego_frame) {
    ex.coop.push_back(make_query_set(set));
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t u = 0; u < set.size(); ++u) {
      if (!set[u].gt_object_id) continue;
      for (std::size_t x = 0; x < ego.size(); ++x) {
        if (ego[x].gt_object_id == set[u].gt_object_id) pairs.emplace_back(static_cast<int>(u), static_cast<int>(x));
      }
    }
    ex.pairs.push_back(std::move(pairs));
  }
  check_labels(ex);
  return ex;
}

void check_labels(const TrainingExample& example) {
  require(example.pairs.size() == example.coop.size(), ErrorKind::LabelInconsistency,
          "one pair list per cooperative set expected");
  for (std::size_t i = 0; i < example.coop.size(); ++i) {
    std::vector<bool> coop_used(static_cast<std::size_t>(example.coop[i].size()), false);
    std::vector<bool> ego_used(static_cast<std::size_t>(example.ego.size()), false);
    for (const auto& [u, x] : example.pairs[i]) {
      require(u >= 0 && u < example.coop[i].size() && x >= 0 && x < example.ego.size(),
              ErrorKind::LabelInconsistency, "ground-truth pair index out of range");
      require(!coop_used[static_cast<std::size_t>(u)] && !ego_used[static_cast<std::size_t>(x)],
              ErrorKind::LabelInconsistency, "ground-truth pairing is not injective");
      coop_used[static_cast<std::size_t>(u)] = true;
      ego_used[static_cast<std::size_t>(x)] = true;
    }
  }
}

LossAndGradient caa_loss(const CaaParams& params, const TrainingExample& example, const CaaOptions& options,
                         const LossWeights& weights) {
  check_labels(example);
  check_sets(params, example.ego, example.coop);
  Tape tape;
  const ParamVars w = bind(tape, params, true);
  const ScoreGraph g = build_scores(tape, w, params, example.ego, example.coop, options);
  const LossGraph loss = build_loss(tape, g, example, weights);
  LossAndGradient out{loss.breakdown, zero_caa(params.layers, params.dim, params.heads)};
  if (loss.empty) return out;
  tape.backward(loss.total);
  for_each_tensor([](const std::string&, const Var& v, MatrixXd& grad) { grad = v.grad(); }, w, out.gradient);
  return out;
}

LossBreakdown caa_loss_value(const CaaParams& params, const TrainingExample& example, const CaaOptions& options,
                             const LossWeights& weights) {
  check_labels(example);
  check_sets(params, example.ego, example.coop);
  Tape tape;
  const ParamVars w = bind(tape, params, false);
  const ScoreGraph g = build_scores(tape, w, params, example.ego, example.coop, options);
  return build_loss(tape, g, example, weights).breakdown;
}

double mean_loss(const CaaParams& params, std::span<const TrainingExample> dataset, const CaaOptions& options,
                 const LossWeights& weights) {
  if (dataset.empty()) return 0.0;
  double total = 0.0;
  for (const TrainingExample& ex : dataset) total += caa_loss_value(params, ex, options, weights).total;
  return total / static_cast<double>(dataset.size());
}

TrainingResult train_caa(CaaParams initial, std::span<const TrainingExample> dataset, int steps,
                         double learning_rate, std::uint64_t seed, const CaaOptions& options,
                         const LossWeights& weights) {
  require(steps >= 1, ErrorKind::InvalidArgument, "training needs at least one step");
  require(!dataset.empty(), ErrorKind::InvalidArgument, "training dataset is empty");
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorKind::InvalidArgument,
          "learning rate must be finite and non-negative");
  validate(initial);
  TrainingResult result{std::move(initial), {}};
  result.loss_curve.reserve(static_cast<std::size_t>(steps));
  Rng rng(derive_seed(seed, {0x7EA1}));
  std::vector<std::size_t> order(dataset.size());
  std::size_t cursor = order.size();
  for (int step = 0; step < steps; ++step) {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const LossAndGradient lg = caa_loss(result.params, dataset[order[cursor++]], options, weights);
    bool finite = std::isfinite(lg.loss.total);
    for_each_tensor([&](const std::string&, const MatrixXd& g) { finite = finite && g.allFinite(); }, lg.gradient);
    if (!finite) {
      fail(ErrorKind::DivergenceDetected, "training loss became non-finite at step " + std::to_string(step));
    }
    result.loss_curve.push_back(lg.loss.total);
    for_each_tensor([&](const std::string&, MatrixXd& p, const MatrixXd& g) { p -= learning_rate * g; },
                    result.params, lg.gradient);
  }
  return result;
}

void write_params(std::ostream& out, const CaaParams& params) {
  validate(params);
  out.write(kParamsMagic, sizeof kParamsMagic);
  write_i64(out, params.layers);
  write_i64(out, params.dim);
  write_i64(out, params.heads);
  for_each_tensor(
      [&](const std::string&, const MatrixXd& m) {
        for (Index i = 0; i < m.rows(); ++i)
          for (Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
          }
      },
      params);
}

CaaParams read_params(std::istream& in) {
  char magic[sizeof kParamsMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kParamsMagic, sizeof magic) != 0) {
    fail(ErrorKind::IoFailure, "not a CAA parameter file");
  }
  const std::int64_t layers = read_i64(in);
  const std::int64_t dim = read_i64(in);
  const std::int64_t heads = read_i64(in);
  if (layers < 0 || layers > 64 || dim <= 0 || dim > 4096 || heads <= 0) {
    fail(ErrorKind::IoFailure, "implausible parameter header");
  }
  CaaParams p = zero_caa(static_cast<int>(layers), static_cast<int>(dim), static_cast<int>(heads));
  for_each_tensor(
      [&](const std::string& name, MatrixXd& m) {
        for (Index i = 0; i < m.rows(); ++i)
          for (Index j = 0; j < m.cols(); ++j) {
            double v = 0.0;
            in.read(reinterpret_cast<char*>(&v), sizeof v);
            if (!in) fail(ErrorKind::IoFailure, "truncated tensor " + name);
            m(i, j) = v;
          }
      },
      p);
  if (in.peek() != std::char_traits<char>::eof()) fail(ErrorKind::IoFailure, "trailing bytes in parameter file");
  validate(p);
  return p;
}

void save_params(const std::filesystem::path& path, const CaaParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
  write_params(out, params);
  if (!out) fail(ErrorKind::IoFailure, "failed writing " + path.string());
}

CaaParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open " + path.string());
  return read_params(in);
}

void save_loss_curve(const std::filesystem::path& path, std::span<const double> curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
  out << "step,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out << i << ',' << text::exact(curve[i]) << '\n';
  if (!out) fail(ErrorKind::IoFailure, "failed writing " + path.string());
}

}  // namespace coop
