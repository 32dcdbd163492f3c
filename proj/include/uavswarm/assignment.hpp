#pragma once

// Decision layer: optimal slot assignment for a formation switch and the
// straight-line, simultaneous-arrival trajectories that realize it.

#include "uavswarm/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>

namespace uavswarm {

struct AssignmentResult {
  Permutation permutation;  // row i -> column permutation[i]
  double total_cost = 0.0;
};

inline double assignment_cost(const Eigen::Ref<const Matrix>& cost,
                              const Permutation& perm) {
  double total = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i)
    total += cost(static_cast<Eigen::Index>(i), perm[i]);
  return total;
}

inline bool is_permutation_of_range(const Permutation& perm) {
  Permutation sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != static_cast<int>(i)) return false;
  return true;
}

namespace detail {

inline void require_square_finite(const Eigen::Ref<const Matrix>& cost,
                                  const char* who) {
  if (cost.rows() != cost.cols())
    throw ValidationError(std::string(who) + ": cost matrix is " +
                          std::to_string(cost.rows()) + "x" +
                          std::to_string(cost.cols()) + ", expected square");
  if (!cost.allFinite())
    throw ValidationError(std::string(who) + ": cost matrix has non-finite entries");
}

}  // namespace detail

// Shortest augmenting path Hungarian solver with row/column potentials,
// O(N^3). Rows are inserted in ascending order; columns are scanned in
// ascending order and, among columns at equal reduced distance, an
// unassigned column wins. Accepts negative costs.
inline AssignmentResult hungarian(const Eigen::Ref<const Matrix>& cost) {
  detail::require_square_finite(cost, "hungarian");
  const int n = static_cast<int>(cost.rows());
  AssignmentResult out;
  if (n == 0) return out;

  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> row_of(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (int i = 1; i <= n; ++i) {
    row_of[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = row_of[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        const bool better = minv[j] < delta;
        const bool free_tie = minv[j] == delta && j1 != 0 &&
                              row_of[j] == 0 && row_of[j1] != 0;
        if (better || free_tie) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != 0);
    do {
      const int j1 = way[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  out.permutation.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    out.permutation[static_cast<std::size_t>(row_of[j] - 1)] = j - 1;
  out.total_cost = assignment_cost(cost, out.permutation);
  return out;
}

inline constexpr int kBruteForceMaxN = 9;

// Enumerates every permutation in lexicographic order; first strict minimum wins.
inline AssignmentResult brute_force_assignment(const Eigen::Ref<const Matrix>& cost) {
  detail::require_square_finite(cost, "brute_force_assignment");
  const int n = static_cast<int>(cost.rows());
  if (n > kBruteForceMaxN)
    throw ValidationError("brute_force_assignment: N=" + std::to_string(n) +
                          " exceeds " + std::to_string(kBruteForceMaxN));
  Permutation perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  AssignmentResult best{perm, assignment_cost(cost, perm)};
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double c = assignment_cost(cost, perm);
    if (c < best.total_cost) best = {perm, c};
  }
  return best;
}

namespace detail {

inline void require_same_shape(const Eigen::Ref<const PointSet>& a,
                               const Eigen::Ref<const PointSet>& b,
                               const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError(std::string(who) + ": point sets are " +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          " and " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
}

}  // namespace detail

// kappa_ij = -(g_i . s_j)
inline Matrix pseudo_cost(const Eigen::Ref<const PointSet>& g,
                          const Eigen::Ref<const PointSet>& s) {
  detail::require_same_shape(g, s, "pseudo_cost");
  return -(g * s.transpose());
}

// C_ij = ||g_i - f_j||^2
inline Matrix squared_distance_cost(const Eigen::Ref<const PointSet>& g,
                                    const Eigen::Ref<const PointSet>& f) {
  detail::require_same_shape(g, f, "squared_distance_cost");
  const auto n = g.rows();
  Matrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      c(i, j) = (g.row(i) - f.row(j)).squaredNorm();
  return c;
}

// ---------------------------------------------------------------------------
// Spacing

inline std::optional<std::pair<int, int>> find_spacing_violation(
    const Eigen::Ref<const PointSet>& p, double radius) {
  const double threshold = 8.0 * radius * radius;  // (2*sqrt(2)*r)^2
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = i + 1; j < p.rows(); ++j)
      if ((p.row(i) - p.row(j)).squaredNorm() < threshold)
        return std::pair<int, int>{static_cast<int>(i), static_cast<int>(j)};
  return std::nullopt;
}

// All pairwise distances >= 2*sqrt(2)*r (inclusive).
inline bool check_spacing(const Eigen::Ref<const PointSet>& p, double radius) {
  return !find_spacing_violation(p, radius).has_value();
}

// ---------------------------------------------------------------------------
// Scale and translation

struct Workspace {
  Vector lo;
  Vector hi;

  bool contains(const Eigen::Ref<const Vector>& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
  bool contains_all(const Eigen::Ref<const PointSet>& p) const {
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      if (!contains(p.row(i).transpose())) return false;
    return true;
  }
};

struct ScaleOptions {
  double rho_max = 1.0;
  double rho_min = 1e-6;
  double tolerance = 1e-6;  // relative, for the bisection
  std::optional<double> rho;          // fixed scale
  std::optional<Vector> translation;  // fixed translation (used with rho)
};

struct ScaleFit {
  double rho = 1.0;
  Vector translation;
};

inline Vector centroid(const Eigen::Ref<const PointSet>& p) {
  return p.colwise().mean().transpose();
}

inline PointSet apply_scale(const Eigen::Ref<const PointSet>& s, double rho,
                            const Eigen::Ref<const Vector>& d) {
  return (rho * s).rowwise() + d.transpose();
}

// Centroid-matching translation d = c(g) - rho*c(s), with rho the largest
// value in (0, rho_max] keeping every slot inside `bounds`. Spacing is
// monotone increasing in rho and containment monotone decreasing, so the
// bound-limited rho is optimal iff it also satisfies spacing.
inline ScaleFit fit_scale_translation(const Eigen::Ref<const PointSet>& g,
                                      const Eigen::Ref<const PointSet>& s,
                                      const Workspace& bounds, double radius,
                                      const ScaleOptions& opt = {}) {
  detail::require_same_shape(g, s, "fit_scale_translation");
  const Vector cg = centroid(g);
  const Vector cs = centroid(s);

  if (opt.rho && opt.translation) {
    if (*opt.rho <= 0.0) throw ValidationError("fit_scale_translation: fixed rho must be > 0");
    if (opt.translation->size() != g.cols())
      throw ValidationError("fit_scale_translation: translation has wrong dimension");
    return {*opt.rho, *opt.translation};
  }
  if (opt.rho) {
    if (*opt.rho <= 0.0) throw ValidationError("fit_scale_translation: fixed rho must be > 0");
    return {*opt.rho, cg - *opt.rho * cs};
  }

  bool distinct = false;
  for (Eigen::Index j = 1; j < s.rows() && !distinct; ++j)
    distinct = (s.row(j) - s.row(0)).squaredNorm() > 0.0;
  if (!distinct) return {1.0, cg - cs};

  const auto fits = [&](double rho) {
    return bounds.contains_all(apply_scale(s, rho, cg - rho * cs));
  };
  if (!bounds.contains(cg))
    throw ValidationError("fit_scale_translation: centroid of current positions lies outside the workspace");

  double rho = opt.rho_max;
  if (!fits(rho)) {
    double lo = 0.0, hi = opt.rho_max;
    while (hi - lo > opt.tolerance * hi) {
      const double mid = 0.5 * (lo + hi);
      (fits(mid) ? lo : hi) = mid;
    }
    rho = lo;
  }
  const Vector d = cg - rho * cs;
  if (rho < opt.rho_min)
    throw ValidationError("fit_scale_translation: largest in-bounds rho " + std::to_string(rho) +
                          " is below rho_min " + std::to_string(opt.rho_min));
  if (auto bad = find_spacing_violation(apply_scale(s, rho, d), radius))
    throw ValidationError("fit_scale_translation: at the largest in-bounds rho " + std::to_string(rho) +
                          ", shape points " + std::to_string(bad->first) + " and " +
                          std::to_string(bad->second) + " are closer than 2*sqrt(2)*r");
  return {rho, d};
}

// ---------------------------------------------------------------------------
// Timing and trajectories

inline double switching_duration(const Eigen::Ref<const PointSet>& g,
                                 const Eigen::Ref<const PointSet>& f,
                                 const Permutation& chi, double v_max) {
  if (!(v_max > 0.0)) throw ValidationError("switching_duration: v_max must be > 0");
  detail::require_same_shape(g, f, "switching_duration");
  double longest = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    longest = std::max(longest, (g.row(i) - f.row(chi[static_cast<std::size_t>(i)])).norm());
  return longest / v_max;
}

struct TrajectoryPoint {
  Vector position;
  Vector velocity;
};

// h(k) = g + ((f - g)/t_s) * kT on [0, t_s], clamped to f afterwards.
inline TrajectoryPoint desired_trajectory(const Eigen::Ref<const Vector>& g,
                                          const Eigen::Ref<const Vector>& f,
                                          double t_s, double T, std::int64_t k) {
  const double t = static_cast<double>(k) * T;
  if (t_s <= 0.0 || t >= t_s) return {f, Vector::Zero(f.size())};
  const Vector velocity = (f - g) / t_s;
  return {g + velocity * t, velocity};
}

// ---------------------------------------------------------------------------
// Plan

struct FormationPlan {
  PointSet start;    // G, agent order
  PointSet targets;  // F, slot order
  Permutation assignment;
  double total_cost = 0.0;  // sum_i ||g_i - f_chi(i)||^2
  double t_s = 0.0;
  double scale = 1.0;
  Vector translation;

  Vector target_of(int agent) const {
    return targets.row(assignment[static_cast<std::size_t>(agent)]).transpose();
  }

  TrajectoryPoint desired(int agent, std::int64_t k, double T) const {
    return desired_trajectory(start.row(agent).transpose(), target_of(agent), t_s, T, k);
  }

  // Number of steps until every agent's reference sits on its target.
  std::int64_t arrival_steps(double T) const {
    if (t_s <= 0.0) return 0;
    return static_cast<std::int64_t>(std::ceil(t_s / T - 1e-9));
  }
};

enum class CostModel { pseudo, squared_distance };

struct PlanOptions {
  double v_max = 1.0;
  double radius = 0.0;
  Workspace bounds;
  ScaleOptions scale;
  CostModel cost_model = CostModel::pseudo;
};

inline std::string describe_pair(const char* what, std::pair<int, int> p) {
  return std::string(what) + " points " + std::to_string(p.first) + " and " +
         std::to_string(p.second) + " closer than 2*sqrt(2)*r";
}

// fit_scale_translation -> cost -> hungarian -> switching_duration.
inline FormationPlan plan_switch(const Eigen::Ref<const PointSet>& g,
                                 const Eigen::Ref<const PointSet>& s,
                                 const PlanOptions& opt) {
  detail::require_same_shape(g, s, "plan_switch");
  if (auto bad = find_spacing_violation(g, opt.radius))
    throw ValidationError("plan_switch: " + describe_pair("start", *bad));

  const ScaleFit fit = fit_scale_translation(g, s, opt.bounds, opt.radius, opt.scale);
  FormationPlan plan;
  plan.start = g;
  plan.targets = apply_scale(s, fit.rho, fit.translation);
  plan.scale = fit.rho;
  plan.translation = fit.translation;
  if (auto bad = find_spacing_violation(plan.targets, opt.radius))
    throw ValidationError("plan_switch: " + describe_pair("target", *bad));

  const Matrix cost = opt.cost_model == CostModel::pseudo
                          ? pseudo_cost(g, s)
                          : squared_distance_cost(g, plan.targets);
  plan.assignment = hungarian(cost).permutation;
  plan.total_cost = assignment_cost(squared_distance_cost(g, plan.targets), plan.assignment);
  plan.t_s = switching_duration(g, plan.targets, plan.assignment, opt.v_max);
  return plan;
}

}  // namespace uavswarm
