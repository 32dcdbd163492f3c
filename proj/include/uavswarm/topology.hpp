#pragma once

// Follower communication graph plus leader pinning.
//
// Weights are restricted to {0, 1}. Follower indices are 0-based; the
// alternating pinning of circulant_topology pins follower 0, which is
// follower 1 in 1-based numbering.

#include "uavswarm/common.hpp"

#include <queue>
#include <string>

namespace uavswarm {

class Topology {
 public:
  Topology(IntMatrix adjacency, Eigen::VectorXi pinning)
      : adjacency_(std::move(adjacency)), pinning_(std::move(pinning)) {
    const auto n = adjacency_.rows();
    if (n == 0) throw ValidationError("topology: no followers");
    if (adjacency_.cols() != n)
      throw ValidationError("topology: adjacency must be square");
    if (pinning_.size() != n)
      throw ValidationError("topology: pinning length " +
                            std::to_string(pinning_.size()) +
                            " does not match " + std::to_string(n) +
                            " followers");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (adjacency_(i, i) != 0)
        throw ValidationError("topology: nonzero diagonal at " +
                              std::to_string(i));
      for (Eigen::Index j = 0; j < n; ++j) {
        const int w = adjacency_(i, j);
        if (w != 0 && w != 1)
          throw ValidationError("topology: adjacency entry (" +
                                std::to_string(i) + "," + std::to_string(j) +
                                ") is not 0 or 1");
      }
      if (pinning_(i) != 0 && pinning_(i) != 1)
        throw ValidationError("topology: pinning entry " + std::to_string(i) +
                              " is not 0 or 1");
    }
    if (pinning_.sum() == 0)
      throw ValidationError("topology: leader pins no follower");

    neighbors_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (adjacency_(i, j) == 1)
          neighbors_[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
  }

  int size() const noexcept { return static_cast<int>(adjacency_.rows()); }
  const IntMatrix& adjacency() const noexcept { return adjacency_; }
  const Eigen::VectorXi& pinning() const noexcept { return pinning_; }
  int pinning(int i) const { return pinning_(i); }

  // In-neighbors of follower i, ascending.
  const std::vector<int>& neighbors(int i) const {
    return neighbors_[static_cast<std::size_t>(i)];
  }

  Eigen::VectorXi in_degree() const { return adjacency_.rowwise().sum(); }

  IntMatrix degree_matrix() const {
    return in_degree().asDiagonal();
  }

  IntMatrix laplacian() const { return degree_matrix() - adjacency_; }

  IntMatrix pinning_matrix() const { return pinning_.asDiagonal(); }

  // gamma_i = sum_j w_ij + b_i
  int gamma(int i) const {
    return static_cast<int>(adjacency_.row(i).sum()) + pinning_(i);
  }

 private:
  IntMatrix adjacency_;
  Eigen::VectorXi pinning_;
  std::vector<std::vector<int>> neighbors_;
};

inline Topology build_topology(IntMatrix adjacency, Eigen::VectorXi pinning) {
  return Topology(std::move(adjacency), std::move(pinning));
}

// Each follower linked to `halfwidth` predecessors and successors (cyclic).
// Pinning alternates starting with follower 0.
inline Topology circulant_topology(int n, int halfwidth) {
  if (halfwidth < 1) throw ValidationError("circulant: halfwidth must be >= 1");
  if (n <= 2 * halfwidth)
    throw ValidationError("circulant: n=" + std::to_string(n) +
                          " must exceed 2*halfwidth=" +
                          std::to_string(2 * halfwidth));
  IntMatrix w = IntMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int d = 1; d <= halfwidth; ++d) {
      w(i, (i + d) % n) = 1;
      w(i, (i - d + n) % n) = 1;
    }
  Eigen::VectorXi b(n);
  for (int i = 0; i < n; ++i) b(i) = (i % 2 == 0) ? 1 : 0;
  return Topology(std::move(w), std::move(b));
}

struct ConnectivityReport {
  bool followers_connected = false;
  bool leader_spanning_tree = false;

  bool ok() const noexcept { return followers_connected && leader_spanning_tree; }
  explicit operator bool() const noexcept { return ok(); }
};

namespace detail {

// BFS over edges i -> j where adjacency(j, i) == 1 or adjacency(i, j) == 1
// (undirected) or only the information-flow direction (directed).
inline std::vector<char> reach(const Topology& t, std::vector<int> seeds,
                               bool undirected) {
  const int n = t.size();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<int> q;
  for (int s : seeds) {
    if (!seen[static_cast<std::size_t>(s)]) {
      seen[static_cast<std::size_t>(s)] = 1;
      q.push(s);
    }
  }
  const IntMatrix& w = t.adjacency();
  while (!q.empty()) {
    const int j = q.front();
    q.pop();
    for (int i = 0; i < n; ++i) {
      if (seen[static_cast<std::size_t>(i)]) continue;
      // w(i, j) = 1 means i receives from j.
      const bool edge = w(i, j) == 1 || (undirected && w(j, i) == 1);
      if (edge) {
        seen[static_cast<std::size_t>(i)] = 1;
        q.push(i);
      }
    }
  }
  return seen;
}

}  // namespace detail

// Follower graph connected (edges taken as undirected) and every follower
// reachable from the leader through pinned followers along information flow.
inline ConnectivityReport validate_connectivity(const Topology& t) {
  ConnectivityReport r;
  const auto all = [](const std::vector<char>& v) {
    for (char c : v)
      if (!c) return false;
    return true;
  };
  r.followers_connected = all(detail::reach(t, {0}, true));
  std::vector<int> pinned;
  for (int i = 0; i < t.size(); ++i)
    if (t.pinning(i) == 1) pinned.push_back(i);
  r.leader_spanning_tree = !pinned.empty() && all(detail::reach(t, pinned, false));
  return r;
}

}  // namespace uavswarm
