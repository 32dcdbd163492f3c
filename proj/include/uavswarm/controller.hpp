#pragma once

// Control layer: tracking and disagreement errors, the event-trigger test,
// zero-order hold, and the online actor-critic weight updates.

#include "uavswarm/common.hpp"
#include "uavswarm/rbf.hpp"
#include "uavswarm/topology.hpp"

#include <cmath>
#include <span>
#include <string>

namespace uavswarm {

// xi_p, xi_v for one follower.
struct TrackingError {
  Vector p;
  Vector v;
};

struct ErrorState {
  TrackingError xi;
  Vector eps_p;
  Vector eps_v;

  // [eps_p; eps_v]
  Vector eps() const {
    Vector out(eps_p.size() + eps_v.size());
    out << eps_p, eps_v;
    return out;
  }
};

inline TrackingError tracking_error(const Eigen::Ref<const Vector>& p_i,
                                    const Eigen::Ref<const Vector>& v_i,
                                    const Eigen::Ref<const Vector>& p_0,
                                    const Eigen::Ref<const Vector>& v_0,
                                    const Eigen::Ref<const Vector>& eta_p,
                                    const Eigen::Ref<const Vector>& eta_v) {
  return {p_i - p_0 - eta_p, v_i - v_0 - eta_v};
}

// eps_i = sum_j w_ij (xi_i - xi_j) + b_i xi_i, separately for p and v.
inline ErrorState disagreement_error(const TrackingError& xi_i,
                                     std::span<const TrackingError> neighbor_xis,
                                     std::span<const double> weights, int b_i) {
  if (neighbor_xis.size() != weights.size())
    throw ValidationError("disagreement_error: one weight per neighbor required");
  ErrorState out{xi_i, b_i * xi_i.p, b_i * xi_i.v};
  for (std::size_t j = 0; j < neighbor_xis.size(); ++j) {
    out.eps_p += weights[j] * (xi_i.p - neighbor_xis[j].p);
    out.eps_v += weights[j] * (xi_i.v - neighbor_xis[j].v);
  }
  return out;
}

// Same sum read straight out of stacked rows [xi_p, xi_v] (N x 2m).
inline Vector disagreement_row(const Topology& topo, const Eigen::Ref<const Matrix>& xi,
                               int i) {
  Vector eps = topo.pinning(i) * xi.row(i).transpose();
  for (int j : topo.neighbors(i)) eps += (xi.row(i) - xi.row(j)).transpose();
  return eps;
}

// ---------------------------------------------------------------------------
// Parameters and state

struct ControllerParams {
  double alpha_p = 6.0;
  double alpha_v = 4.0;
  double mu_actor = 6.0;
  double mu_critic = 8.0;
  double kappa = 0.65;
  double beta = 0.95;
  double actor_init = 0.3;
  double critic_init = 0.3;

  void validate() const {
    if (!(alpha_p > 0.0 && alpha_v > 0.0))
      throw ValidationError("controller: alpha_p and alpha_v must be > 0");
    if (!(mu_actor > 0.0 && mu_critic > 0.0))
      throw ValidationError("controller: mu_actor and mu_critic must be > 0");
    if (!(kappa > 0.5 && kappa < std::sqrt(0.5)))
      throw ValidationError("controller: kappa must lie in (1/2, sqrt(2)/2)");
    if (!(beta > 0.0 && beta <= 1.0))
      throw ValidationError("controller: beta must lie in (0, 1]");
  }
};

struct ActorCriticState {
  Matrix w_actor;   // s x m
  Matrix w_critic;  // s x m
  ControllerParams params;

  static ActorCriticState initial(Eigen::Index nodes, Eigen::Index m,
                                  const ControllerParams& params) {
    params.validate();
    return {Matrix::Constant(nodes, m, params.actor_init),
            Matrix::Constant(nodes, m, params.critic_init), params};
  }
};

struct TriggerState {
  std::int64_t last_trigger_step = -1;
  Vector held_eps;
  Vector held_u;
  std::vector<std::int64_t> history;
};

// ---------------------------------------------------------------------------
// Trigger

inline double threshold_coefficient(double kappa) {
  return (1.0 - 2.0 * kappa * kappa) / (2.0 * kappa * kappa);
}

// f = ||e||^2 - ((1 - 2 kappa^2) / (2 kappa^2)) ||eps||^2; fires iff f > 0.
inline double trigger_condition(const Eigen::Ref<const Vector>& e,
                                const Eigen::Ref<const Vector>& eps, double kappa) {
  if (!(kappa > 0.5 && kappa < std::sqrt(0.5)))
    throw ValidationError("trigger_condition: kappa=" + std::to_string(kappa) +
                          " outside (1/2, sqrt(2)/2)");
  return e.squaredNorm() - threshold_coefficient(kappa) * eps.squaredNorm();
}

// -alpha_p eps_p - alpha_v eps_v - 1/2 W_a^T psi
inline Vector actor_control(const Eigen::Ref<const Vector>& eps,
                            const Eigen::Ref<const Vector>& psi,
                            const ActorCriticState& ac) {
  const Eigen::Index m = eps.size() / 2;
  return -ac.params.alpha_p * eps.head(m) - ac.params.alpha_v * eps.tail(m) -
         0.5 * (ac.w_actor.transpose() * psi);
}

struct ControlDecision {
  Vector u;
  bool triggered = false;
  double f = 0.0;  // trigger function before the snapshot (NaN on the first call)
};

enum class TriggerPolicy { event, always };

// Evaluates the trigger and, on an event, snapshots eps and the new control.
// The first call for an agent always triggers.
inline ControlDecision control(const Eigen::Ref<const Vector>& eps,
                               const Eigen::Ref<const Vector>& psi,
                               const ActorCriticState& ac, TriggerState& trig,
                               std::int64_t k, TriggerPolicy policy = TriggerPolicy::event) {
  ControlDecision d;
  const bool first = trig.last_trigger_step < 0;
  d.f = first ? std::nan("") : trigger_condition(trig.held_eps - eps, eps, ac.params.kappa);
  d.triggered = first || policy == TriggerPolicy::always || d.f > 0.0;
  if (d.triggered) {
    trig.held_u = actor_control(eps, psi, ac);
    if (!trig.held_u.allFinite()) throw RuntimeAbort(k, "non-finite control");
    trig.held_eps = eps;
    trig.last_trigger_step = k;
    trig.history.push_back(k);
  }
  d.u = trig.held_u;
  return d;
}

// W_c - mu_c T psi psi^T W_c, every step.
inline Matrix update_critic(const ActorCriticState& ac, const Eigen::Ref<const Vector>& psi,
                            double T) {
  const Eigen::RowVectorXd proj = psi.transpose() * ac.w_critic;
  return ac.w_critic - (ac.params.mu_critic * T) * psi * proj;
}

// W_a - mu_a T psi psi^T (W_a - W_c) at triggering instants, held otherwise.
inline Matrix update_actor(const ActorCriticState& ac, const Eigen::Ref<const Vector>& psi,
                           double T, bool triggered) {
  if (!triggered) return ac.w_actor;
  const Eigen::RowVectorXd proj = psi.transpose() * (ac.w_actor - ac.w_critic);
  return ac.w_actor - (ac.params.mu_actor * T) * psi * proj;
}

// ---------------------------------------------------------------------------
// Gain conditions: mu_c > mu_a > 0 and 0 < T < (mu_c - mu_a) / (mu_c^2 lambda_max)

struct GainReport {
  bool ordering_ok = false;
  bool step_ok = false;
  double bound = 0.0;
  double lambda_max = 0.0;

  bool ok() const noexcept { return ordering_ok && step_ok; }
};

inline GainReport validate_gains(double mu_critic, double mu_actor, double T,
                                 double lambda_max) {
  GainReport r;
  r.lambda_max = lambda_max;
  r.ordering_ok = mu_critic > mu_actor && mu_actor > 0.0;
  r.bound = lambda_max > 0.0 ? (mu_critic - mu_actor) / (mu_critic * mu_critic * lambda_max)
                             : std::numeric_limits<double>::infinity();
  r.step_ok = T > 0.0 && T < r.bound;
  return r;
}

// ---------------------------------------------------------------------------
// Cost

inline double utility(const Eigen::Ref<const Vector>& eps, const Eigen::Ref<const Vector>& u) {
  return eps.squaredNorm() + u.squaredNorm();
}

struct RolloutSample {
  Vector eps;
  Vector u;
};

// sum_{j < horizon} beta^j R_j
inline double performance_index(std::span<const double> utilities, double beta,
                                std::size_t horizon) {
  if (!(beta > 0.0 && beta <= 1.0))
    throw ValidationError("performance_index: beta must lie in (0, 1]");
  if (horizon < 1) throw ValidationError("performance_index: horizon must be >= 1");
  if (utilities.size() < horizon)
    throw ValidationError("performance_index: rollout shorter than horizon");
  double total = 0.0, discount = 1.0;
  for (std::size_t j = 0; j < horizon; ++j) {
    total += discount * utilities[j];
    discount *= beta;
  }
  return total;
}

inline double performance_index(std::span<const RolloutSample> rollout, double beta,
                                std::size_t horizon) {
  std::vector<double> r;
  r.reserve(rollout.size());
  for (const auto& s : rollout) r.push_back(utility(s.eps, s.u));
  return performance_index(std::span<const double>(r), beta, horizon);
}

// ---------------------------------------------------------------------------
// Per-agent controller

struct TickResult {
  Vector u;
  bool triggered = false;
  double f = 0.0;           // before the snapshot
  double f_after = 0.0;     // re-evaluated after the snapshot
  double psi_energy = 0.0;  // ||psi||^2
};

class AgentController {
 public:
  AgentController(const RbfConfig& rbf, Eigen::Index m, const ControllerParams& params)
      : rbf_(&rbf), ac_(ActorCriticState::initial(rbf.nodes(), m, params)) {
    if (rbf.input_dim() != 2 * m)
      throw ValidationError("controller: rbf input dimension " +
                            std::to_string(rbf.input_dim()) + " != 2m = " +
                            std::to_string(2 * m));
  }

  // trigger -> control/actor update (if triggered) -> critic update
  TickResult tick(const Eigen::Ref<const Vector>& eps, std::int64_t k, double T,
                  TriggerPolicy policy = TriggerPolicy::event) {
    const Vector psi = rbf_->basis(eps);
    ControlDecision d = control(eps, psi, ac_, trig_, k, policy);
    TickResult r;
    r.triggered = d.triggered;
    r.f = d.f;
    r.f_after = trigger_condition(trig_.held_eps - eps, eps, ac_.params.kappa);
    r.psi_energy = psi.squaredNorm();
    r.u = std::move(d.u);
    Matrix next_actor = update_actor(ac_, psi, T, d.triggered);
    ac_.w_critic = update_critic(ac_, psi, T);
    ac_.w_actor = std::move(next_actor);
    return r;
  }

  const ActorCriticState& state() const noexcept { return ac_; }
  const TriggerState& trigger() const noexcept { return trig_; }

 private:
  const RbfConfig* rbf_;
  ActorCriticState ac_;
  TriggerState trig_;
};

}  // namespace uavswarm
