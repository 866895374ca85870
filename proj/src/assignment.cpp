#include "coop/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coop/error.hpp"

namespace coop {

bool MatchResult::is_partition(std::size_t n_coop, std::size_t n_ego) const {
  std::vector<int> coop_seen(n_coop, 0);
  std::vector<int> ego_seen(n_ego, 0);
  const auto mark = [](std::vector<int>& seen, int i) {
    if (i < 0 || static_cast<std::size_t>(i) >= seen.size()) return false;
    return ++seen[static_cast<std::size_t>(i)] == 1;
  };
  for (const MatchPair& p : pairs) {
    if (!mark(coop_seen, p.coop_index) || !mark(ego_seen, p.ego_index)) return false;
    if (!(p.score >= 0.0 && p.score <= 1.0)) return false;
  }
  for (int i : unmatched_coop) {
    if (!mark(coop_seen, i)) return false;
  }
  for (int i : unmatched_ego) {
    if (!mark(ego_seen, i)) return false;
  }
  const auto all_once = [](const std::vector<int>& s) {
    return std::all_of(s.begin(), s.end(), [](int c) { return c == 1; });
  };
  return all_once(coop_seen) && all_once(ego_seen);
}

void MatchResult::fill_unmatched(std::size_t n_coop, std::size_t n_ego) {
  std::vector<bool> coop_used(n_coop, false);
  std::vector<bool> ego_used(n_ego, false);
  for (const MatchPair& p : pairs) {
    coop_used[static_cast<std::size_t>(p.coop_index)] = true;
    ego_used[static_cast<std::size_t>(p.ego_index)] = true;
  }
  unmatched_coop.clear();
  unmatched_ego.clear();
  for (std::size_t i = 0; i < n_coop; ++i) {
    if (!coop_used[i]) unmatched_coop.push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < n_ego; ++i) {
    if (!ego_used[i]) unmatched_ego.push_back(static_cast<int>(i));
  }
}

MatchResult greedy_distance_match(std::span<const Vec3> coop_positions,
                                  std::span<const Vec3> ego_positions, double radius,
                                  std::span<const double> coop_confidence) {
  require(radius > 0.0, ErrorKind::InvalidArgument, "greedy radius must be positive");
  require(coop_confidence.empty() || coop_confidence.size() == coop_positions.size(),
          ErrorKind::DimensionMismatch, "one confidence per coop query expected");
  std::vector<int> order(coop_positions.size());
  std::iota(order.begin(), order.end(), 0);
  if (!coop_confidence.empty()) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return coop_confidence[static_cast<std::size_t>(a)] > coop_confidence[static_cast<std::size_t>(b)];
    });
  }
  std::vector<bool> taken(ego_positions.size(), false);
  MatchResult result;
  for (int u : order) {
    int best = -1;
    double best_d = radius;
    for (std::size_t x = 0; x < ego_positions.size(); ++x) {
      if (taken[x]) continue;
      const double d = (coop_positions[static_cast<std::size_t>(u)] - ego_positions[x]).norm();
      if (d <= best_d && (best < 0 || d < best_d)) {
        best = static_cast<int>(x);
        best_d = d;
      }
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = true;
      result.pairs.push_back({u, best, std::clamp(1.0 - best_d / radius, 0.0, 1.0)});
    }
  }
  result.fill_unmatched(coop_positions.size(), ego_positions.size());
  return result;
}

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  require(cost.allFinite(), ErrorKind::InvalidArgument, "assignment costs must be finite");
  Assignment out;
  out.row_to_col.assign(static_cast<std::size_t>(cost.rows()), -1);
  if (cost.rows() == 0 || cost.cols() == 0) return out;

  const bool transposed = cost.rows() > cost.cols();
  const Eigen::MatrixXd a = transposed ? Eigen::MatrixXd(cost.transpose()) : cost;
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based potentials; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (int j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const int row = p[j] - 1;
    const int col = j - 1;
    if (transposed) {
      out.row_to_col[static_cast<std::size_t>(col)] = row;
    } else {
      out.row_to_col[static_cast<std::size_t>(row)] = col;
    }
  }
  for (std::size_t r = 0; r < out.row_to_col.size(); ++r) {
    if (out.row_to_col[r] >= 0) out.total_cost += cost(static_cast<Eigen::Index>(r), out.row_to_col[r]);
  }
  return out;
}

MatchResult hungarian_match(std::span<const Vec3> coop_positions,
                            std::span<const Vec3> ego_positions, double reject_threshold) {
  require(reject_threshold > 0.0, ErrorKind::InvalidArgument, "reject threshold must be positive");
  const auto nc = static_cast<Eigen::Index>(coop_positions.size());
  const auto ne = static_cast<Eigen::Index>(ego_positions.size());
  Eigen::MatrixXd cost(nc, ne);
  for (Eigen::Index i = 0; i < nc; ++i)
    for (Eigen::Index j = 0; j < ne; ++j)
      cost(i, j) = (coop_positions[static_cast<std::size_t>(i)] - ego_positions[static_cast<std::size_t>(j)]).norm();
  const Assignment a = solve_assignment(cost);
  MatchResult result;
  for (Eigen::Index i = 0; i < nc; ++i) {
    const int j = a.row_to_col[static_cast<std::size_t>(i)];
    if (j < 0) continue;
    const double d = cost(i, j);
    if (d > reject_threshold) continue;
    result.pairs.push_back({static_cast<int>(i), j, std::clamp(1.0 - d / reject_threshold, 0.0, 1.0)});
  }
  result.fill_unmatched(coop_positions.size(), ego_positions.size());
  return result;
}

namespace {

double logsumexp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (std::isinf(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

Eigen::MatrixXd log_sinkhorn(const Eigen::MatrixXd& affinity, double temperature, int iters) {
  require(temperature > 0.0, ErrorKind::InvalidArgument, "sinkhorn temperature must be positive");
  require(iters >= 1, ErrorKind::InvalidArgument, "sinkhorn needs at least one iteration");
  require(affinity.allFinite(), ErrorKind::InvalidArgument, "affinity must be finite");
  Eigen::MatrixXd z = affinity / temperature;
  if (z.size() == 0) return z;
  const bool rows_exact = z.rows() <= z.cols();
  const bool cols_exact = z.cols() <= z.rows();
  for (int it = 0; it < iters; ++it) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double l = logsumexp(z.row(i).transpose());
      z.row(i).array() -= rows_exact ? l : std::max(l, 0.0);
    }
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double l = logsumexp(z.col(j));
      z.col(j).array() -= cols_exact ? l : std::max(l, 0.0);
    }
  }
  return z;
}

Eigen::MatrixXd sinkhorn(const Eigen::MatrixXd& affinity, double temperature, int iters) {
  Eigen::MatrixXd p = log_sinkhorn(affinity, temperature, iters).array().exp().matrix();
  if (!p.allFinite()) fail(ErrorKind::NumericalOverflow, "sinkhorn produced a non-finite entry");
  return p;
}

MatchResult mutual_nearest_match(const Eigen::MatrixXd& scores, double tau) {
  const Eigen::Index m = scores.rows();
  const Eigen::Index n = scores.cols();
  MatchResult result;
  if (m > 0 && n > 0) {
    // Strict '>' keeps the lowest index on ties.
    std::vector<Eigen::Index> row_best(static_cast<std::size_t>(m), 0), col_best(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 1; j < n; ++j)
        if (scores(i, j) > scores(i, row_best[static_cast<std::size_t>(i)])) row_best[static_cast<std::size_t>(i)] = j;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 1; i < m; ++i)
        if (scores(i, j) > scores(col_best[static_cast<std::size_t>(j)], j)) col_best[static_cast<std::size_t>(j)] = i;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index j = row_best[static_cast<std::size_t>(i)];
      if (col_best[static_cast<std::size_t>(j)] != i) continue;
      const double s = scores(i, j);
      if (s >= tau) result.pairs.push_back({static_cast<int>(i), static_cast<int>(j), std::clamp(s, 0.0, 1.0)});
    }
  }
  result.fill_unmatched(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
  require(result.is_partition(static_cast<std::size_t>(m), static_cast<std::size_t>(n)),
          ErrorKind::IndexMismatch, "mutual nearest neighbour produced a non-injective match");
  return result;
}

}  // namespace coop
