#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coop/assignment.hpp"
#include "coop/error.hpp"
#include "coop/random.hpp"

namespace coop {
namespace {

std::vector<Vec3> random_points(Rng& rng, int n, double spread) {
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) out.emplace_back(uniform(rng, -spread, spread), uniform(rng, -spread, spread), 0.0);
  return out;
}

// Exhaustive minimum over injective row → column maps (rows ≤ cols assumed
// after transposing).
double brute_force_min(const Eigen::MatrixXd& cost) {
  const Eigen::MatrixXd c = cost.rows() <= cost.cols() ? cost : Eigen::MatrixXd(cost.transpose());
  std::vector<int> cols(static_cast<std::size_t>(c.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index r = 0; r < c.rows(); ++r) total += c(r, cols[static_cast<std::size_t>(r)]);
    best = std::min(best, total);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

TEST(Greedy, JustOutsideRadiusStaysUnmatched) {
  const std::vector<Vec3> coop{Vec3(3.0 + 1e-9, 0, 0)};
  const std::vector<Vec3> ego{Vec3::Zero()};
  const MatchResult r = greedy_distance_match(coop, ego, 3.0);
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.unmatched_coop, std::vector<int>{0});
  EXPECT_EQ(r.unmatched_ego, std::vector<int>{0});
}

TEST(Greedy, CoincidentPositionsPairPerfectly) {
  Rng rng(1);
  const auto pts = random_points(rng, 8, 50);
  const MatchResult r = greedy_distance_match(pts, pts, 1.0);
  ASSERT_EQ(r.pairs.size(), 8u);
  for (const MatchPair& p : r.pairs) {
    EXPECT_EQ(p.coop_index, p.ego_index);
    EXPECT_EQ(p.score, 1.0);
  }
}

TEST(Greedy, ConfidenceOrderDecidesContention) {
  const std::vector<Vec3> coop{Vec3(0.5, 0, 0), Vec3(-0.2, 0, 0)};
  const std::vector<Vec3> ego{Vec3::Zero()};
  const std::vector<double> conf{0.3, 0.9};
  const MatchResult r = greedy_distance_match(coop, ego, 2.0, conf);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].coop_index, 1);
  const MatchResult by_index = greedy_distance_match(coop, ego, 2.0);
  EXPECT_EQ(by_index.pairs[0].coop_index, 0);
}

TEST(Greedy, MatchesIndependentReimplementation) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto coop = random_points(rng, 5, 5);
    const auto ego = random_points(rng, 5, 5);
    std::vector<double> conf;
    for (int i = 0; i < 5; ++i) conf.push_back(std::round(uniform(rng, 0, 4)) / 4.0);
    const double radius = 3.0;
    const MatchResult r = greedy_distance_match(coop, ego, radius, conf);

    std::vector<int> visit(5);
    std::iota(visit.begin(), visit.end(), 0);
    for (std::size_t i = 0; i < visit.size(); ++i)
      for (std::size_t j = i + 1; j < visit.size(); ++j)
        if (conf[static_cast<std::size_t>(visit[j])] > conf[static_cast<std::size_t>(visit[i])] ||
            (conf[static_cast<std::size_t>(visit[j])] == conf[static_cast<std::size_t>(visit[i])] && visit[j] < visit[i]))
          std::swap(visit[i], visit[j]);
    std::vector<std::pair<int, int>> expected;
    std::vector<bool> used(5, false);
    for (int u : visit) {
      int pick = -1;
      for (int x = 0; x < 5; ++x) {
        if (used[static_cast<std::size_t>(x)]) continue;
        const double d = (coop[static_cast<std::size_t>(u)] - ego[static_cast<std::size_t>(x)]).norm();
        if (d > radius) continue;
        if (pick < 0 || d < (coop[static_cast<std::size_t>(u)] - ego[static_cast<std::size_t>(pick)]).norm()) pick = x;
      }
      if (pick >= 0) {
        used[static_cast<std::size_t>(pick)] = true;
        expected.emplace_back(u, pick);
      }
    }
    std::vector<std::pair<int, int>> got;
    for (const MatchPair& p : r.pairs) got.emplace_back(p.coop_index, p.ego_index);
    EXPECT_EQ(got, expected);
    EXPECT_TRUE(r.is_partition(5, 5));
  }
}

TEST(Greedy, RejectsNonPositiveRadius) {
  EXPECT_THROW(greedy_distance_match({}, {}, 0.0), Error);
}

TEST(Hungarian, CrossingBeatsGreedy) {
  const std::vector<Vec3> coop{Vec3(0, 0, 0), Vec3(1, 0, 0)};
  const std::vector<Vec3> ego{Vec3(1.1, 0, 0), Vec3(0.1, 0, 0)};
  const MatchResult r = hungarian_match(coop, ego, 5.0);
  ASSERT_EQ(r.pairs.size(), 2u);
  double total = 0.0;
  for (const MatchPair& p : r.pairs) {
    EXPECT_EQ(p.ego_index, 1 - p.coop_index);
    total += (coop[static_cast<std::size_t>(p.coop_index)] - ego[static_cast<std::size_t>(p.ego_index)]).norm();
  }
  EXPECT_NEAR(total, 0.2, 1e-12);
}

TEST(Hungarian, EmptyEgo) {
  const std::vector<Vec3> coop{Vec3(0, 0, 0), Vec3(1, 0, 0)};
  const MatchResult r = hungarian_match(coop, {}, 5.0);
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.unmatched_coop, (std::vector<int>{0, 1}));
}

TEST(Hungarian, RejectsLongPairs) {
  const std::vector<Vec3> coop{Vec3(0, 0, 0), Vec3(10, 0, 0)};
  const std::vector<Vec3> ego{Vec3(0.5, 0, 0), Vec3(30, 0, 0)};
  const MatchResult r = hungarian_match(coop, ego, 3.0);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].coop_index, 0);
  EXPECT_TRUE(r.is_partition(2, 2));
}

TEST(Hungarian, EqualsPermutationBruteForce) {
  Rng rng(3);
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::MatrixXd cost(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = uniform(rng, 0.0, 10.0);
      const Assignment a = solve_assignment(cost);
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += cost(i, a.row_to_col[static_cast<std::size_t>(i)]);
      EXPECT_NEAR(total, a.total_cost, 1e-12);
      EXPECT_EQ(total, brute_force_min(cost));
    }
  }
}

TEST(Hungarian, IntegerCostsWithTiesExact) {
  Rng rng(4);
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::MatrixXd cost(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = std::floor(uniform(rng, 0.0, 4.0));
      EXPECT_EQ(solve_assignment(cost).total_cost, brute_force_min(cost));
    }
  }
}

TEST(Hungarian, RectangularBothOrientations) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int r = 1 + static_cast<int>(uniform(rng, 0, 5.99));
    const int c = 1 + static_cast<int>(uniform(rng, 0, 5.99));
    Eigen::MatrixXd cost(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) cost(i, j) = uniform(rng, 0.0, 10.0);
    const Assignment a = solve_assignment(cost);
    int assigned = 0;
    std::vector<bool> used(static_cast<std::size_t>(c), false);
    double total = 0.0;
    for (int i = 0; i < r; ++i) {
      const int j = a.row_to_col[static_cast<std::size_t>(i)];
      if (j < 0) continue;
      EXPECT_FALSE(used[static_cast<std::size_t>(j)]);
      used[static_cast<std::size_t>(j)] = true;
      total += cost(i, j);
      ++assigned;
    }
    EXPECT_EQ(assigned, std::min(r, c));
    EXPECT_NEAR(total, brute_force_min(cost), 1e-12);
  }
}

TEST(Sinkhorn, OneByOne) {
  Eigen::MatrixXd s(1, 1);
  s << 3.7;
  EXPECT_NEAR(sinkhorn(s, 0.1, 1)(0, 0), 1.0, 1e-15);
}

TEST(Sinkhorn, ConstantTwoByTwo) {
  const Eigen::MatrixXd s = Eigen::MatrixXd::Constant(2, 2, 0.3);
  const Eigen::MatrixXd p = sinkhorn(s, 0.5, 5);
  EXPECT_LT((p.array() - 0.5).abs().maxCoeff(), 1e-15);
}

TEST(Sinkhorn, RandomSquareIsDoublyStochastic) {
  Rng rng(6);
  for (int n = 2; n <= 10; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::MatrixXd s(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s(i, j) = standard_normal(rng);
      const Eigen::MatrixXd p = sinkhorn(s, 1.0, 100);
      EXPECT_LT((p.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-6);
      EXPECT_LT((p.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-6);
      EXPECT_GE(p.minCoeff(), 0.0);
    }
  }
}

TEST(Sinkhorn, DominantDiagonal) {
  const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(4, 4) * 10.0;
  const Eigen::MatrixXd p = sinkhorn(s, 1.0, 100);
  for (int i = 0; i < 4; ++i) EXPECT_GT(p(i, i), 0.95);
}

TEST(Sinkhorn, RectangularMarginals) {
  Rng rng(7);
  for (const auto& [r, c] : {std::pair{3, 7}, std::pair{8, 2}}) {
    Eigen::MatrixXd s(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) s(i, j) = standard_normal(rng);
    const Eigen::MatrixXd p = sinkhorn(s, 0.5, 200);
    const Eigen::VectorXd small = r < c ? Eigen::VectorXd(p.rowwise().sum()) : Eigen::VectorXd(p.colwise().sum().transpose());
    const Eigen::VectorXd large = r < c ? Eigen::VectorXd(p.colwise().sum().transpose()) : Eigen::VectorXd(p.rowwise().sum());
    EXPECT_LT((small.array() - 1.0).abs().maxCoeff(), 1e-6);
    EXPECT_LE(large.maxCoeff(), 1.0 + 1e-6);
  }
}

TEST(Sinkhorn, HugeAffinitiesStayFinite) {
  Eigen::MatrixXd s(3, 3);
  s << 1e4, -1e4, 5e3, 0, 2e4, -3e4, 7e3, 7e3, 7e3;
  const Eigen::MatrixXd p = sinkhorn(s, 0.01, 50);
  EXPECT_TRUE(p.allFinite());
}

TEST(Sinkhorn, RejectsBadArguments) {
  const Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  EXPECT_THROW(sinkhorn(s, 0.0, 5), Error);
  EXPECT_THROW(sinkhorn(s, 1.0, 0), Error);
}

TEST(MutualNearest, KeepsMutualPairsAboveTau) {
  Eigen::MatrixXd scores(3, 3);
  scores << 0.9, 0.1, 0.0,
            0.8, 0.2, 0.1,
            0.0, 0.1, 0.3;
  const MatchResult r = mutual_nearest_match(scores, 0.25);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[0].coop_index, 0);
  EXPECT_EQ(r.pairs[0].ego_index, 0);
  EXPECT_EQ(r.pairs[1].coop_index, 2);
  EXPECT_EQ(r.pairs[1].ego_index, 2);
  EXPECT_EQ(r.unmatched_coop, std::vector<int>{1});
  EXPECT_EQ(r.unmatched_ego, std::vector<int>{1});
  EXPECT_TRUE(mutual_nearest_match(scores, 0.95).pairs.empty());
}

TEST(MutualNearest, TiesGoToLowestIndex) {
  const Eigen::MatrixXd scores = Eigen::MatrixXd::Constant(2, 2, 0.5);
  const MatchResult r = mutual_nearest_match(scores, 0.1);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].coop_index, 0);
  EXPECT_EQ(r.pairs[0].ego_index, 0);
}

TEST(MatchResult, PartitionCheck) {
  MatchResult r;
  r.pairs = {{0, 1, 0.5}};
  r.fill_unmatched(2, 2);
  EXPECT_TRUE(r.is_partition(2, 2));
  r.pairs.push_back({1, 1, 0.5});
  EXPECT_FALSE(r.is_partition(2, 2));
}

TEST(MatcherFuzz, EveryBaselineResultIsInjective) {
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const int nc = static_cast<int>(uniform(rng, 0, 12.99));
    const int ne = static_cast<int>(uniform(rng, 0, 12.99));
    const auto coop = random_points(rng, nc, 10);
    const auto ego = random_points(rng, ne, 10);
    EXPECT_TRUE(greedy_distance_match(coop, ego, 3.0).is_partition(static_cast<std::size_t>(nc), static_cast<std::size_t>(ne)));
    EXPECT_TRUE(hungarian_match(coop, ego, 3.0).is_partition(static_cast<std::size_t>(nc), static_cast<std::size_t>(ne)));
  }
}

}  // namespace
}  // namespace coop
