#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uavswarm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntMatrix = Eigen::MatrixXi;

// N x m coordinates, one agent (or slot) per row.
using PointSet = Eigen::MatrixXd;

// Maps agent i to slot permutation[i].
using Permutation = std::vector<int>;

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: shapes, ranges, spacing, schema.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Raised mid-simulation (divergence, non-finite state, workspace escape).
class RuntimeAbort : public Error {
 public:
  RuntimeAbort(std::int64_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

}  // namespace uavswarm
