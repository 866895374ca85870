#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "coop/geometry.hpp"

namespace coop {

struct MatchPair {
  int coop_index = 0;
  int ego_index = 0;
  double score = 0.0;  // in [0, 1]
};

/// Injective correspondence between one cooperative set and the ego set,
/// plus the leftovers on each side.
struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<int> unmatched_coop;
  std::vector<int> unmatched_ego;

  /// Pairs are injective and pairs ∪ unmatched cover each index set exactly once.
  bool is_partition(std::size_t n_coop, std::size_t n_ego) const;

  /// Rebuilds both unmatched lists from `pairs` (ascending order).
  void fill_unmatched(std::size_t n_coop, std::size_t n_ego);
};

/// Coop queries in descending confidence (ties: lower index first) each take
/// the nearest still-free ego query within `radius`.
MatchResult greedy_distance_match(std::span<const Vec3> coop_positions,
                                  std::span<const Vec3> ego_positions, double radius,
                                  std::span<const double> coop_confidence = {});

struct Assignment {
  std::vector<int> row_to_col;  // -1 for rows left unassigned
  double total_cost = 0.0;
};

/// Minimum-cost injective assignment of min(rows, cols) pairs for a
/// rectangular cost matrix (Kuhn–Munkres with potentials, O(n²m)).
Assignment solve_assignment(const Eigen::MatrixXd& cost);

/// Globally optimal Euclidean assignment, then pairs longer than
/// `reject_threshold` are dropped back into the unmatched sets.
MatchResult hungarian_match(std::span<const Vec3> coop_positions,
                            std::span<const Vec3> ego_positions, double reject_threshold);

/// Log-space Sinkhorn on affinity / temperature. Rows and columns are
/// rescaled alternately (rows first). The smaller side of the matrix is
/// normalised to sum exactly 1 and the larger side to sum at most 1; square
/// inputs therefore converge to a doubly stochastic matrix. Returns log P.
Eigen::MatrixXd log_sinkhorn(const Eigen::MatrixXd& affinity, double temperature, int iters);

/// exp(log_sinkhorn(...)). Throws NumericalOverflow if any entry is non-finite.
Eigen::MatrixXd sinkhorn(const Eigen::MatrixXd& affinity, double temperature, int iters);

/// Mutual nearest neighbour on `scores` (lowest index wins ties) with
/// score ≥ tau.
MatchResult mutual_nearest_match(const Eigen::MatrixXd& scores, double tau);

}  // namespace coop
