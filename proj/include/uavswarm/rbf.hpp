#pragma once

// Gaussian radial basis features and the linear readout W^T psi shared by
// the actor and critic networks.

#include "uavswarm/common.hpp"

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace uavswarm {

class RbfConfig {
 public:
  RbfConfig(Matrix centers, double width)
      : RbfConfig(centers, Vector::Constant(centers.rows(), width)) {}

  RbfConfig(Matrix centers, Vector widths)
      : centers_(std::move(centers)), widths_(std::move(widths)) {
    if (centers_.rows() == 0) throw ValidationError("rbf: no centers");
    if (widths_.size() != centers_.rows())
      throw ValidationError("rbf: one width per center required");
    if (!centers_.allFinite()) throw ValidationError("rbf: non-finite center");
    for (Eigen::Index j = 0; j < widths_.size(); ++j)
      if (!(widths_(j) > 0.0)) throw ValidationError("rbf: width must be > 0");
    for (Eigen::Index a = 0; a < centers_.rows(); ++a)
      for (Eigen::Index b = a + 1; b < centers_.rows(); ++b)
        if (centers_.row(a) == centers_.row(b))
          throw ValidationError("rbf: duplicate centers " + std::to_string(a) +
                                " and " + std::to_string(b));
    inv_two_width_sq_ = (2.0 * widths_.array().square()).inverse().matrix();
  }

  Eigen::Index nodes() const noexcept { return centers_.rows(); }
  Eigen::Index input_dim() const noexcept { return centers_.cols(); }
  const Matrix& centers() const noexcept { return centers_; }
  const Vector& widths() const noexcept { return widths_; }

  // psi_j = exp(-||omega - nu_j||^2 / (2 iota_j^2))
  Vector basis(const Eigen::Ref<const Vector>& omega) const {
    if (omega.size() != input_dim())
      throw ValidationError("rbf: input has dimension " + std::to_string(omega.size()) +
                            ", expected " + std::to_string(input_dim()));
    Vector psi(nodes());
    for (Eigen::Index j = 0; j < nodes(); ++j)
      psi(j) = std::exp(-(centers_.row(j).transpose() - omega).squaredNorm() *
                        inv_two_width_sq_(j));
    return psi;
  }

  // Largest ||psi||^2 over the centers themselves; a practical estimate of
  // sup ||psi||^2 for well-separated centers.
  double center_peak_energy() const {
    double best = 0.0;
    for (Eigen::Index j = 0; j < nodes(); ++j)
      best = std::max(best, basis(centers_.row(j).transpose()).squaredNorm());
    return best;
  }

 private:
  Matrix centers_;
  Vector widths_;
  Vector inv_two_width_sq_;
};

inline Vector basis(const RbfConfig& cfg, const Eigen::Ref<const Vector>& omega) {
  return cfg.basis(omega);
}

// w^T psi(omega); w is s x m.
inline Vector evaluate(const RbfConfig& cfg, const Eigen::Ref<const Matrix>& w,
                       const Eigen::Ref<const Vector>& omega) {
  if (w.rows() != cfg.nodes())
    throw ValidationError("rbf: weight matrix has " + std::to_string(w.rows()) +
                          " rows, expected " + std::to_string(cfg.nodes()));
  return w.transpose() * cfg.basis(omega);
}

// Uniform lattice over [lo, hi]^d, row-major (last axis fastest). An axis
// with a single point sits at the midpoint.
inline Matrix make_grid_centers(double lo, double hi,
                                const std::vector<int>& per_axis_counts,
                                std::optional<Eigen::Index> expected_nodes = std::nullopt) {
  if (per_axis_counts.empty()) throw ValidationError("grid centers: no axes");
  Eigen::Index total = 1;
  for (int c : per_axis_counts) {
    if (c < 1) throw ValidationError("grid centers: per-axis count must be >= 1");
    total *= c;
  }
  if (expected_nodes && *expected_nodes != total)
    throw ValidationError("grid centers: per-axis counts give " + std::to_string(total) +
                          " nodes, expected " + std::to_string(*expected_nodes));
  const auto d = static_cast<Eigen::Index>(per_axis_counts.size());
  const auto coord = [&](int count, int idx) {
    if (count == 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(idx) / static_cast<double>(count - 1);
  };
  Matrix centers(total, d);
  for (Eigen::Index row = 0; row < total; ++row) {
    Eigen::Index rem = row;
    for (Eigen::Index axis = d - 1; axis >= 0; --axis) {
      const int c = per_axis_counts[static_cast<std::size_t>(axis)];
      centers(row, axis) = coord(c, static_cast<int>(rem % c));
      rem /= c;
    }
  }
  return centers;
}

// `nodes` points picked from the levels^d lattice over [lo, hi]^d: the
// lattice midpoint (odd levels), then the 2^d corners, then greedy
// farthest-point insertion. Ties go to the earliest candidate in a
// seeded Fisher-Yates order, so the layout is a pure function of the seed.
inline Matrix subsampled_lattice_centers(double lo, double hi, int levels, int d,
                                         Eigen::Index nodes, std::uint64_t seed) {
  if (levels < 2 || d < 1) throw ValidationError("lattice centers: need levels >= 2, d >= 1");
  const Matrix lattice = make_grid_centers(lo, hi, std::vector<int>(static_cast<std::size_t>(d), levels));
  const Eigen::Index total = lattice.rows();
  if (nodes < 1 || nodes > total)
    throw ValidationError("lattice centers: cannot pick " + std::to_string(nodes) +
                          " of " + std::to_string(total) + " lattice points");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);

  std::vector<char> taken(static_cast<std::size_t>(total), 0);
  std::vector<Eigen::Index> chosen;
  const auto take = [&](Eigen::Index i) {
    if (!taken[static_cast<std::size_t>(i)] && static_cast<Eigen::Index>(chosen.size()) < nodes) {
      taken[static_cast<std::size_t>(i)] = 1;
      chosen.push_back(i);
    }
  };
  const double mid = 0.5 * (lo + hi);
  for (Eigen::Index i : order)
    if (levels % 2 == 1 && (lattice.row(i).array() == mid).all()) take(i);
  for (Eigen::Index i : order)
    if ((lattice.row(i).array() == lo || lattice.row(i).array() == hi).all()) take(i);

  std::vector<double> nearest(static_cast<std::size_t>(total),
                              std::numeric_limits<double>::infinity());
  const auto refresh = [&](Eigen::Index c) {
    for (Eigen::Index i = 0; i < total; ++i)
      nearest[static_cast<std::size_t>(i)] = std::min(
          nearest[static_cast<std::size_t>(i)], (lattice.row(i) - lattice.row(c)).squaredNorm());
  };
  for (Eigen::Index c : chosen) refresh(c);
  while (static_cast<Eigen::Index>(chosen.size()) < nodes) {
    Eigen::Index pick = -1;
    for (Eigen::Index i : order) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      if (pick < 0 || nearest[static_cast<std::size_t>(i)] > nearest[static_cast<std::size_t>(pick)])
        pick = i;
    }
    take(pick);
    refresh(pick);
  }

  Matrix out(nodes, d);
  for (Eigen::Index r = 0; r < nodes; ++r) out.row(r) = lattice.row(chosen[static_cast<std::size_t>(r)]);
  return out;
}

}  // namespace uavswarm
