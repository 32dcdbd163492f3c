#pragma once

// Discrete-time double integrator with an additive bounded disturbance on
// the velocity row:
//   p(k+1) = p(k) + v(k) T
//   v(k+1) = v(k) + u(k) T + f(p(k), v(k))
// f enters without the factor T.

#include "uavswarm/common.hpp"

#include <cmath>

namespace uavswarm {

struct AgentState {
  Vector p;
  Vector v;

  static AgentState at_rest(const Eigen::Ref<const Vector>& position) {
    return {position, Vector::Zero(position.size())};
  }
};

struct NonlinearityParams {
  double amplitude = 0.01;  // bounds |f_c|
  double frequency = 1.0;   // rad/m
  Vector phase;             // length m; empty means zeros
};

inline AgentState step_agent(const AgentState& s, const Eigen::Ref<const Vector>& u,
                             const Eigen::Ref<const Vector>& f, double T) {
  return {s.p + s.v * T, s.v + u * T + f};
}

inline AgentState step_leader(const AgentState& s, const Eigen::Ref<const Vector>& u0,
                              double T) {
  return {s.p + s.v * T, s.v + u0 * T};
}

// agent_index 0 is the leader (always zero); followers are 1..N.
inline Vector nonlinearity(const AgentState& s, const NonlinearityParams& params,
                           int agent_index) {
  const auto m = s.p.size();
  Vector out = Vector::Zero(m);
  if (agent_index == 0 || params.amplitude == 0.0) return out;
  for (Eigen::Index c = 0; c < m; ++c) {
    const double phase = params.phase.size() == m ? params.phase(c) : 0.0;
    out(c) = params.amplitude *
             std::sin(params.frequency * (s.p(c) + s.v(c)) + phase +
                      static_cast<double>(agent_index));
  }
  return out;
}

}  // namespace uavswarm
