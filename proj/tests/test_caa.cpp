#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "coop/autodiff.hpp"
#include "coop/caa.hpp"
#include "coop/error.hpp"
#include "coop/eval.hpp"
#include "coop/random.hpp"

namespace coop {
namespace {

QuerySet random_set(Rng& rng, int n, int dim, double spread = 20.0) {
  QuerySet s;
  s.descriptors.resize(n, dim);
  s.positions.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) s.descriptors(i, j) = standard_normal(rng);
    s.descriptors.row(i).normalize();
    s.positions.row(i) << uniform(rng, -spread, spread), uniform(rng, -spread, spread), uniform(rng, 0, 2);
  }
  return s;
}

void translate(QuerySet& s, const Vec3& t) { s.positions.rowwise() += t.transpose(); }

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Autodiff operators, each checked against central differences through a
// random linear read-out.

using ad::Tape;
using ad::Var;
using UnaryOp = std::function<Var(Tape&, Var)>;

void check_unary(const char* name, const UnaryOp& op, Eigen::MatrixXd x0) {
  Rng rng(std::hash<std::string>{}(name));
  Eigen::MatrixXd readout;
  const auto eval = [&](const Eigen::MatrixXd& x, Eigen::MatrixXd* grad) {
    Tape tape;
    Var xv = tape.parameter(x);
    Var y = op(tape, xv);
    if (readout.size() == 0) {
      readout.resize(y.rows(), y.cols());
      for (Eigen::Index i = 0; i < readout.size(); ++i) readout(i) = standard_normal(rng);
    }
    Var out = ad::sum(ad::cmul(y, tape.constant(readout)));
    if (grad) {
      tape.backward(out);
      *grad = xv.grad();
    }
    return out.value()(0, 0);
  };
  Eigen::MatrixXd analytic;
  eval(x0, &analytic);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    Eigen::MatrixXd xp = x0, xm = x0;
    xp(i) += h;
    xm(i) -= h;
    const double numeric = (eval(xp, nullptr) - eval(xm, nullptr)) / (2 * h);
    EXPECT_NEAR(analytic(i), numeric, 1e-6 * std::max(1.0, std::abs(numeric))) << name << " entry " << i;
  }
}

TEST(Autodiff, OperatorGradients) {
  Rng rng(1);
  const auto rnd = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = standard_normal(rng);
    return m;
  };
  const Eigen::MatrixXd b = rnd(4, 3), row = rnd(1, 3), col = rnd(3, 1), other = rnd(3, 4);
  const Eigen::MatrixXd wide = rnd(5, 3), tall = rnd(3, 5), keys = rnd(6, 4);
  check_unary("matmul", [&](Tape& t, Var x) { return ad::matmul(x, t.constant(b)); }, rnd(3, 4));
  check_unary("matmul_rhs", [&](Tape& t, Var x) { return ad::matmul(t.constant(other), x); }, rnd(4, 2));
  check_unary("matmul_nt", [](Tape&, Var x) { return ad::matmul_nt(x, x); }, rnd(3, 4));
  check_unary("add_sub", [&](Tape& t, Var x) { return ad::sub(ad::add(x, x), t.constant(other)); }, rnd(3, 4));
  check_unary("add_row", [&](Tape& t, Var x) { return ad::add_row(t.constant(wide), x); }, row);
  check_unary("add_col", [&](Tape& t, Var x) { return ad::add_col(t.constant(tall), x); }, col);
  check_unary("scale", [](Tape&, Var x) { return ad::scale(x, -2.5); }, rnd(2, 3));
  check_unary("cmul", [](Tape&, Var x) { return ad::cmul(x, x); }, rnd(2, 3));
  check_unary("transpose", [](Tape&, Var x) { return ad::transpose(x); }, rnd(2, 3));
  check_unary("gelu", [](Tape&, Var x) { return ad::gelu(x); }, rnd(3, 3));
  check_unary("log_sigmoid", [](Tape&, Var x) { return ad::log_sigmoid(ad::scale(x, 3.0)); }, rnd(3, 3));
  check_unary("positive_part", [](Tape&, Var x) { return ad::positive_part(x); }, rnd(3, 3));
  check_unary("softmax_rows", [](Tape&, Var x) { return ad::softmax_rows(x); }, rnd(3, 4));
  check_unary("logsumexp_rows", [](Tape&, Var x) { return ad::logsumexp_rows(x); }, rnd(3, 4));
  check_unary("logsumexp_cols", [](Tape&, Var x) { return ad::logsumexp_cols(x); }, rnd(3, 4));
  check_unary("concat_slice", [](Tape&, Var x) {
    const std::vector<Var> parts{ad::slice_rows(x, 1, 2), x};
    const std::vector<Var> cols{ad::slice_cols(x, 0, 2), x};
    return ad::add(ad::slice_rows(ad::concat_rows(parts), 0, 3), ad::slice_cols(ad::concat_cols(cols), 1, 4));
  }, rnd(3, 4));
  check_unary("pair_dot", [&](Tape& t, Var x) { return ad::pair_dot(x, t.constant(keys)); }, rnd(3, 4));
  const std::vector<std::pair<int, int>> cells{{0, 1}, {2, 3}, {0, 1}};
  check_unary("gather", [&](Tape&, Var x) { return ad::gather(x, cells); }, rnd(3, 4));
}

TEST(Autodiff, ConstantsReceiveNoGradient) {
  Tape tape;
  Var c = tape.constant(Eigen::MatrixXd::Ones(2, 2));
  Var p = tape.parameter(Eigen::MatrixXd::Ones(2, 2));
  tape.backward(ad::sum(ad::cmul(c, p)));
  EXPECT_FALSE(tape.needs_grad(c));
  EXPECT_EQ(p.grad(), Eigen::MatrixXd::Ones(2, 2));
}

// ---------------------------------------------------------------------------
// Parameters

TEST(CaaParams, ShapesAndValidation) {
  const CaaParams p = initialize_caa(2, 16, 2, 3);
  EXPECT_NO_THROW(validate(p));
  EXPECT_EQ(p.layer[1].ffn.w1.rows(), 16);
  EXPECT_EQ(p.layer[1].ffn.w1.cols(), 64);
  EXPECT_EQ(p.layer[0].position.hidden_weight.rows(), 4);
  EXPECT_EQ(p.ego_head.bias(0, 0), 1.0);
  EXPECT_EQ(p.layer[0].ffn.b1, Eigen::MatrixXd::Zero(1, 64));
  const double limit = std::sqrt(6.0 / 32.0);
  EXPECT_LE(p.layer[0].intra.query.cwiseAbs().maxCoeff(), limit);
  CaaParams bad = p;
  bad.layer[0].inter.key.resize(3, 3);
  EXPECT_THROW(validate(bad), Error);
  bad = p;
  bad.coop_head.weight(0, 0) = std::nan("");
  EXPECT_THROW(validate(bad), Error);
  EXPECT_THROW(zero_caa(1, 10, 3), Error);
}

TEST(CaaParams, BinaryRoundTrip) {
  const CaaParams p = initialize_caa(2, 8, 1, 5);
  std::stringstream buf;
  write_params(buf, p);
  const CaaParams q = read_params(buf);
  EXPECT_EQ(q.layers, 2);
  EXPECT_EQ(q.dim, 8);
  for_each_tensor([](const std::string& name, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    EXPECT_EQ(a, b) << name;
  }, p, q);
}

TEST(CaaParams, CorruptFilesRejected) {
  std::stringstream bad("NOTMAGIC........");
  EXPECT_THROW(read_params(bad), Error);
  std::stringstream full;
  write_params(full, initialize_caa(1, 8, 1, 5));
  const std::string bytes = full.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(read_params(truncated), Error);
  std::stringstream trailing(bytes + "x");
  EXPECT_THROW(read_params(trailing), Error);
}

// ---------------------------------------------------------------------------
// Refinement

TEST(CaaRefine, ZeroLayersIsIdentity) {
  Rng rng(2);
  const CaaParams p = zero_caa(0, 8, 1);
  const QuerySet ego = random_set(rng, 4, 8);
  const std::vector<QuerySet> coop{random_set(rng, 3, 8), random_set(rng, 5, 8)};
  const RefinedDescriptors r = caa_refine(p, ego, coop);
  EXPECT_EQ(r.ego, ego.descriptors);
  EXPECT_EQ(r.coop[0], coop[0].descriptors);
  EXPECT_EQ(r.coop[1], coop[1].descriptors);
}

TEST(CaaRefine, SingletonSetsStayFinite) {
  Rng rng(3);
  const CaaParams p = initialize_caa(2, 8, 1, 1);
  const QuerySet ego = random_set(rng, 1, 8);
  const std::vector<QuerySet> coop{random_set(rng, 1, 8)};
  const RefinedDescriptors r = caa_refine(p, ego, coop);
  EXPECT_TRUE(r.ego.allFinite());
  EXPECT_TRUE(r.coop[0].allFinite());
  EXPECT_EQ(r.ego.rows(), 1);
}

TEST(CaaRefine, ShapesAndPoolSize) {
  Rng rng(4);
  const CaaParams p = initialize_caa(1, 8, 2, 1);
  for (int n_agents : {1, 2, 4}) {
    const int q = 5;
    const QuerySet ego = random_set(rng, q, 8);
    std::vector<QuerySet> coop;
    for (int a = 0; a < n_agents; ++a) coop.push_back(random_set(rng, q, 8));
    const RefinedDescriptors r = caa_refine(p, ego, coop);
    EXPECT_EQ(r.inter_pool_size, (n_agents + 1) * q);
    ASSERT_EQ(r.coop.size(), coop.size());
    for (const auto& m : r.coop) EXPECT_EQ(m.rows(), q);
  }
}

TEST(CaaRefine, DimensionMismatch) {
  Rng rng(5);
  const CaaParams p = initialize_caa(1, 8, 1, 1);
  const QuerySet ego = random_set(rng, 3, 8);
  const std::vector<QuerySet> coop{random_set(rng, 3, 6)};
  try {
    caa_refine(p, ego, coop);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(CaaRefine, TranslationInvariance) {
  Rng rng(6);
  const CaaParams p = initialize_caa(2, 16, 2, 9);
  for (int trial = 0; trial < 20; ++trial) {
    const QuerySet ego = random_set(rng, 6, 16);
    std::vector<QuerySet> coop{random_set(rng, 5, 16), random_set(rng, 7, 16)};
    const auto before = caa_scores(p, ego, coop);
    const std::size_t which = static_cast<std::size_t>(trial % 2);
    translate(coop[which], Vec3(uniform(rng, -50, 50), uniform(rng, -50, 50), uniform(rng, -2, 2)));
    const auto after = caa_scores(p, ego, coop);
    for (std::size_t k = 0; k < before.size(); ++k) EXPECT_LE(max_abs_diff(before[k].scores, after[k].scores), 1e-9);
    QuerySet moved_ego = ego;
    translate(moved_ego, Vec3(30, -10, 0));
    const auto ego_moved = caa_scores(p, moved_ego, coop);
    for (std::size_t k = 0; k < after.size(); ++k) EXPECT_LE(max_abs_diff(after[k].scores, ego_moved[k].scores), 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Matching

TEST(CaaMatch, OrthonormalIdentityPairing) {
  const int d = 8;
  const CaaParams p = zero_caa(0, d, 1);
  QuerySet ego;
  ego.descriptors = Eigen::MatrixXd::Identity(6, d);
  ego.positions = Eigen::MatrixXd::Zero(6, 3);
  const std::vector<QuerySet> coop{ego};
  CaaOptions opt;
  opt.tau = 0.1;
  const auto r = caa_match(p, ego, coop, opt);
  ASSERT_EQ(r[0].pairs.size(), 6u);
  for (const MatchPair& m : r[0].pairs) EXPECT_EQ(m.coop_index, m.ego_index);
}

TEST(CaaMatch, SaturatedThresholdRejectsEverything) {
  Rng rng(7);
  const CaaParams p = initialize_caa(1, 8, 1, 2);
  const QuerySet ego = random_set(rng, 5, 8);
  const std::vector<QuerySet> coop{ego};
  CaaOptions opt;
  opt.tau = 1.0 - 1e-12;
  const auto scores = caa_scores(p, ego, coop, opt);
  ASSERT_LT(scores[0].coop_matchability.maxCoeff(), 1.0);
  const auto r = caa_match(p, ego, coop, opt);
  EXPECT_TRUE(r[0].pairs.empty());
  EXPECT_EQ(r[0].unmatched_coop.size(), 5u);
  EXPECT_EQ(r[0].unmatched_ego.size(), 5u);
}

TEST(CaaMatch, TauOutsideUnitIntervalRejected) {
  Rng rng(8);
  const CaaParams p = initialize_caa(1, 8, 1, 2);
  const QuerySet ego = random_set(rng, 2, 8);
  const std::vector<QuerySet> coop{ego};
  CaaOptions opt;
  opt.tau = 1.0;
  EXPECT_THROW(caa_match(p, ego, coop, opt), Error);
  opt.tau = 0.0;
  EXPECT_THROW(caa_match(p, ego, coop, opt), Error);
}

TEST(CaaMatch, ScoresAreScaledAssignment) {
  Rng rng(9);
  const CaaParams p = initialize_caa(1, 8, 1, 4);
  const QuerySet ego = random_set(rng, 4, 8);
  const std::vector<QuerySet> coop{random_set(rng, 6, 8)};
  const auto s = caa_scores(p, ego, coop)[0];
  const RefinedDescriptors r = caa_refine(p, ego, coop);
  EXPECT_LE(max_abs_diff(s.affinity, r.coop[0] * r.ego.transpose()), 1e-12);
  EXPECT_LE(max_abs_diff(s.assignment, sinkhorn(s.affinity, 0.1, 20)), 1e-12);
  const Eigen::MatrixXd expected = s.coop_matchability.asDiagonal() * s.assignment * s.ego_matchability.asDiagonal();
  EXPECT_LE(max_abs_diff(s.scores, expected), 1e-12);
}

TEST(CaaMatch, PartitionFuzz) {
  Rng rng(10);
  const CaaParams p = initialize_caa(1, 8, 1, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int ne = static_cast<int>(uniform(rng, 0, 6.99));
    const int n_agents = 1 + static_cast<int>(uniform(rng, 0, 2.99));
    const QuerySet ego = random_set(rng, ne, 8);
    std::vector<QuerySet> coop;
    for (int a = 0; a < n_agents; ++a) coop.push_back(random_set(rng, static_cast<int>(uniform(rng, 0, 6.99)), 8));
    CaaOptions opt;
    opt.tau = uniform(rng, 0.01, 0.99);
    const auto results = caa_match(p, ego, coop, opt);
    ASSERT_EQ(results.size(), coop.size());
    for (std::size_t k = 0; k < results.size(); ++k) {
      EXPECT_TRUE(results[k].is_partition(static_cast<std::size_t>(coop[k].size()), static_cast<std::size_t>(ne)));
    }
  }
}

TEST(CaaMatch, NeedsAtLeastOneCoopSet) {
  Rng rng(11);
  const CaaParams p = initialize_caa(1, 8, 1, 6);
  EXPECT_THROW(caa_match(p, random_set(rng, 3, 8), std::vector<QuerySet>{}), Error);
}

// ---------------------------------------------------------------------------
// Loss and training

TrainingExample small_example(Rng& rng, int dim) {
  TrainingExample ex;
  ex.ego = random_set(rng, 3, dim, 5.0);
  QuerySet coop = random_set(rng, 3, dim, 5.0);
  coop.descriptors.row(0) = (ex.ego.descriptors.row(1) + 0.2 * coop.descriptors.row(0)).normalized();
  coop.descriptors.row(2) = (ex.ego.descriptors.row(0) + 0.2 * coop.descriptors.row(2)).normalized();
  ex.coop = {coop};
  ex.pairs = {{{0, 1}, {2, 0}}};
  return ex;
}

TEST(CaaLoss, GradientMatchesFiniteDifferences) {
  Rng rng(12);
  CaaParams p = initialize_caa(1, 8, 1, 21);
  // Non-zero biases so that every tensor carries signal.
  for_each_tensor([&](const std::string&, Eigen::MatrixXd& t) {
    if (t.rows() == 1) t = t.unaryExpr([&](double v) { return v + 0.1 * standard_normal(rng); });
  }, p);
  const TrainingExample ex = small_example(rng, 8);
  const LossAndGradient lg = caa_loss(p, ex);
  const double h = 1e-5;
  CaaParams probe = p;
  double worst = 0.0;
  for_each_tensor([&](const std::string& name, Eigen::MatrixXd& t, const Eigen::MatrixXd& grad) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double saved = t(i);
      t(i) = saved + h;
      const double up = caa_loss_value(probe, ex).total;
      t(i) = saved - h;
      const double down = caa_loss_value(probe, ex).total;
      t(i) = saved;
      const double numeric = (up - down) / (2 * h);
      const double rel = std::abs(grad(i) - numeric) / std::max({std::abs(grad(i)), std::abs(numeric), 1e-6});
      worst = std::max(worst, rel);
      EXPECT_LT(rel, 1e-4) << name << "[" << i << "] analytic " << grad(i) << " numeric " << numeric;
    }
  }, probe, lg.gradient);
  EXPECT_LT(worst, 1e-4);
}

TEST(CaaLoss, NearPerfectPredictionGivesNearZeroLoss) {
  const int d = 8;
  CaaParams p = zero_caa(0, d, 1);
  p.ego_head.bias(0, 0) = 40.0;
  p.coop_head.bias(0, 0) = 40.0;
  TrainingExample ex;
  ex.ego.descriptors = Eigen::MatrixXd::Identity(4, d);
  ex.ego.positions = Eigen::MatrixXd::Zero(4, 3);
  ex.coop = {ex.ego};
  ex.pairs = {{{0, 0}, {1, 1}, {2, 2}, {3, 3}}};
  CaaOptions opt;
  opt.temperature = 0.02;
  const LossBreakdown l = caa_loss_value(p, ex, opt);
  EXPECT_GE(l.nll, 0.0);
  EXPECT_GE(l.bce, 0.0);
  EXPECT_LT(l.total, 1e-9);
}

TEST(CaaLoss, BceWeightIsLinear) {
  Rng rng(13);
  const CaaParams p = initialize_caa(1, 8, 1, 3);
  const TrainingExample ex = small_example(rng, 8);
  const LossBreakdown one = caa_loss_value(p, ex, {}, LossWeights{1.0, 1.0});
  const LossBreakdown two = caa_loss_value(p, ex, {}, LossWeights{1.0, 2.0});
  EXPECT_NEAR(two.bce, 2.0 * one.bce, 1e-12);
  EXPECT_NEAR(two.nll, one.nll, 1e-12);
  EXPECT_NEAR(one.total, one.nll + one.bce, 1e-12);
}

TEST(CaaLoss, NonInjectiveLabelsRejected) {
  Rng rng(14);
  const CaaParams p = initialize_caa(1, 8, 1, 3);
  TrainingExample ex = small_example(rng, 8);
  ex.pairs = {{{0, 1}, {2, 1}}};
  try {
    caa_loss(p, ex);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LabelInconsistency);
  }
}

TEST(Training, ZeroLearningRateLeavesParametersUnchanged) {
  Rng rng(15);
  const CaaParams p = initialize_caa(1, 8, 1, 3);
  const std::vector<TrainingExample> data{small_example(rng, 8)};
  const TrainingResult r = train_caa(p, data, 1, 0.0, 1);
  for_each_tensor([](const std::string& name, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    EXPECT_EQ(a, b) << name;
  }, p, r.params);
  EXPECT_EQ(r.loss_curve.size(), 1u);
}

TEST(Training, SameSeedSameCurve) {
  Rng rng(16);
  const CaaParams p = initialize_caa(1, 8, 1, 3);
  std::vector<TrainingExample> data;
  for (int i = 0; i < 5; ++i) data.push_back(small_example(rng, 8));
  const TrainingResult a = train_caa(p, data, 30, 0.05, 9);
  const TrainingResult b = train_caa(p, data, 30, 0.05, 9);
  EXPECT_EQ(a.loss_curve, b.loss_curve);
  const TrainingResult c = train_caa(p, data, 30, 0.05, 10);
  EXPECT_NE(a.loss_curve, c.loss_curve);
}

TEST(Training, DivergenceDetected) {
  Rng rng(17);
  const CaaParams p = initialize_caa(1, 8, 1, 3);
  std::vector<TrainingExample> data;
  for (int i = 0; i < 5; ++i) data.push_back(small_example(rng, 8));
  try {
    train_caa(p, data, 200, 1e12, 1);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DivergenceDetected);
  }
}

TEST(Training, RejectsBadArguments) {
  const CaaParams p = initialize_caa(1, 8, 1, 3);
  EXPECT_THROW(train_caa(p, std::vector<TrainingExample>{}, 5, 0.1, 1), Error);
  Rng rng(18);
  const std::vector<TrainingExample> data{small_example(rng, 8)};
  EXPECT_THROW(train_caa(p, data, 0, 0.1, 1), Error);
}

// Desk-scale convergence target on the synthetic corpus: d = 32, L = 2,
// at most 20 queries per agent, 200 scenes, 2000 steps.
TEST(Training, CorpusLossFallsBelowQuarterOfInitial) {
  ScenarioConfig scenario = default_scenario();
  std::vector<TrainingExample> data;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const SceneRecord r = simulate_episode(scenario, derive_seed(1234, {i}));
    data.push_back(to_training_example(make_frame(r, NoiseSpec{0.5, 1.0}, noise_seed_for(r))));
  }
  const CaaParams initial = initialize_caa(2, 32, 1, 7);
  const double before = mean_loss(initial, data);
  const TrainingResult trained = train_caa(initial, data, 2000, 0.01, 7);
  const double after = mean_loss(trained.params, data);
  RecordProperty("initial_loss", std::to_string(before));
  RecordProperty("final_loss", std::to_string(after));
  std::printf("corpus loss %.4f -> %.4f (ratio %.3f)\n", before, after, after / before);
  EXPECT_LT(after, 0.25 * before);
}

}  // namespace
}  // namespace coop
