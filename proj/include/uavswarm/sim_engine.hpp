#pragma once

// Lockstep simulation of the decision and control layers.
//
// Per tick k:
//   1. install a new formation plan if a switch is due (current positions as G)
//   2. tracking errors for every follower from the frozen tick-k states
//   3. disagreement errors
//   4. per-agent trigger test, control/actor update, critic update
//   5. dynamics step for followers and the virtual leader
//   6. record / observe
// Steps 2-5 are independent per agent once the tick's errors are frozen, so
// they may run in parallel without changing the result.

#include "uavswarm/assignment.hpp"
#include "uavswarm/common.hpp"
#include "uavswarm/controller.hpp"
#include "uavswarm/dynamics.hpp"
#include "uavswarm/rbf.hpp"
#include "uavswarm/topology.hpp"

#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uavswarm {

struct FormationStage {
  std::string name;
  PointSet shape;              // S, before scale/translation
  std::optional<double> hold;  // seconds after arrival; default hold_factor * t_s
};

struct RbfSpec {
  enum class Layout { lattice, grid };
  Layout layout = Layout::lattice;
  Eigen::Index nodes = 60;
  double lo = -3.0;
  double hi = 3.0;
  int levels = 3;              // lattice layout
  std::vector<int> per_axis;   // grid layout
  double width = 1.0;
  std::optional<std::uint64_t> seed;

  RbfConfig build(int m, std::uint64_t fallback_seed) const {
    const int d = 2 * m;
    if (layout == Layout::grid) {
      if (static_cast<int>(per_axis.size()) != d)
        throw ValidationError("rbf: grid layout needs " + std::to_string(d) + " per-axis counts");
      return RbfConfig(make_grid_centers(lo, hi, per_axis, nodes), width);
    }
    return RbfConfig(subsampled_lattice_centers(lo, hi, levels, d, nodes, seed.value_or(fallback_seed)),
                     width);
  }
};

struct Scenario {
  std::string name = "scenario";
  Topology topology = circulant_topology(3, 1);
  int dimension = 2;
  double radius = 0.1;
  double v_max = 1.0;
  double T = 0.01;
  Workspace workspace;
  ScaleOptions scale;
  PointSet initial;
  std::vector<FormationStage> formations;
  ControllerParams controller;
  RbfSpec rbf;
  NonlinearityParams disturbance;
  std::uint64_t seed = 1;
  std::optional<std::int64_t> steps;
  double hold_factor = 1.5;
  double workspace_guard = 1e4;
  double divergence_factor = 1e3;

  int agents() const { return topology.size(); }

  PlanOptions plan_options() const {
    PlanOptions o;
    o.v_max = v_max;
    o.radius = radius;
    o.bounds = workspace;
    o.scale = scale;
    return o;
  }
};

struct Diagnostic {
  enum class Severity { error, warning };
  Severity severity;
  std::string message;
};

inline bool has_errors(const std::vector<Diagnostic>& d) {
  for (const auto& x : d)
    if (x.severity == Diagnostic::Severity::error) return true;
  return false;
}

// Plans the whole formation sequence assuming perfect tracking (each switch
// starts from the previous targets).
inline std::vector<FormationPlan> plan_sequence(const Scenario& s) {
  std::vector<FormationPlan> plans;
  PointSet g = s.initial;
  for (const auto& stage : s.formations) {
    plans.push_back(plan_switch(g, stage.shape, s.plan_options()));
    const auto& p = plans.back();
    PointSet next(g.rows(), g.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) next.row(i) = p.target_of(static_cast<int>(i)).transpose();
    g = next;
  }
  return plans;
}

struct GainSummary {
  GainReport worst_case;   // lambda_max = s
  GainReport center_peak;  // lambda_max = max_j ||psi(nu_j)||^2
};

inline GainSummary static_gain_report(const Scenario& s, const RbfConfig& rbf) {
  const auto& c = s.controller;
  return {validate_gains(c.mu_critic, c.mu_actor, s.T, static_cast<double>(rbf.nodes())),
          validate_gains(c.mu_critic, c.mu_actor, s.T, rbf.center_peak_energy())};
}

// Every violated precondition, not just the first.
inline std::vector<Diagnostic> validate_scenario(const Scenario& s) {
  using S = Diagnostic::Severity;
  std::vector<Diagnostic> out;
  const auto error = [&](std::string m) { out.push_back({S::error, std::move(m)}); };
  const int n = s.agents();
  const int m = s.dimension;

  if (m != 2 && m != 3) error("dimension must be 2 or 3");
  if (!(s.T > 0.0)) error("T must be > 0");
  if (!(s.v_max > 0.0)) error("v_max must be > 0");
  if (!(s.radius >= 0.0)) error("radius must be >= 0");
  if (s.workspace.lo.size() != m || s.workspace.hi.size() != m)
    error("workspace bounds must have " + std::to_string(m) + " coordinates");
  else if (!(s.workspace.lo.array() < s.workspace.hi.array()).all())
    error("workspace lo must be below hi on every axis");
  if (s.initial.rows() != n || s.initial.cols() != m)
    error("initial positions are " + std::to_string(s.initial.rows()) + "x" +
          std::to_string(s.initial.cols()) + ", expected " + std::to_string(n) + "x" +
          std::to_string(m));
  if (s.formations.empty()) error("formation sequence is empty");
  for (std::size_t i = 0; i < s.formations.size(); ++i) {
    const auto& f = s.formations[i];
    if (f.shape.rows() != n || f.shape.cols() != m)
      error("formation " + std::to_string(i) + " (" + f.name + ") has " +
            std::to_string(f.shape.rows()) + "x" + std::to_string(f.shape.cols()) +
            " points, expected " + std::to_string(n) + "x" + std::to_string(m));
    if (f.hold && *f.hold < 0.0) error("formation " + std::to_string(i) + " hold must be >= 0");
  }
  try {
    s.controller.validate();
  } catch (const ValidationError& e) {
    error(e.what());
  }

  const auto conn = validate_connectivity(s.topology);
  if (!conn.followers_connected) error("follower graph is not connected");
  if (!conn.leader_spanning_tree) error("no spanning tree rooted at the leader");

  std::optional<RbfConfig> rbf;
  try {
    rbf.emplace(s.rbf.build(m, s.seed));
  } catch (const ValidationError& e) {
    error(e.what());
  }

  if (has_errors(out)) return out;

  if (auto bad = find_spacing_violation(s.initial, s.radius))
    error(describe_pair("initial", *bad));
  PointSet g = s.initial;
  for (std::size_t i = 0; i < s.formations.size(); ++i) {
    const auto& f = s.formations[i];
    try {
      const auto plan = plan_switch(g, f.shape, s.plan_options());
      for (Eigen::Index a = 0; a < g.rows(); ++a) g.row(a) = plan.target_of(static_cast<int>(a)).transpose();
    } catch (const ValidationError& e) {
      error("formation " + std::to_string(i) + " (" + f.name + "): " + e.what());
      break;
    }
  }

  const auto gains = static_gain_report(s, *rbf);
  if (!gains.worst_case.ordering_ok)
    out.push_back({S::warning, "gain ordering mu_critic > mu_actor > 0 violated"});
  if (!gains.worst_case.step_ok)
    out.push_back({S::warning, "T=" + std::to_string(s.T) +
                                   " exceeds the worst-case step bound " +
                                   std::to_string(gains.worst_case.bound) +
                                   " (lambda_max = s = " + std::to_string(rbf->nodes()) + ")"});
  if (!gains.center_peak.step_ok)
    out.push_back({S::warning, "T=" + std::to_string(s.T) +
                                   " exceeds the center-peak step bound " +
                                   std::to_string(gains.center_peak.bound)});
  return out;
}

// ---------------------------------------------------------------------------
// Records

struct AgentSample {
  Vector p;
  Vector v;
  Vector u;
  bool triggered = false;
  double norm_eps = 0.0;
  double norm_xi = 0.0;
  double norm_wa = 0.0;  // weights in effect at step k (before the update)
  double norm_wc = 0.0;
};

struct StepRecord {
  std::int64_t k = 0;
  int phase = 0;  // index of the active formation
  std::vector<AgentSample> agents;

  double global_xi() const {
    double sq = 0.0;
    for (const auto& a : agents) sq += a.norm_xi * a.norm_xi;
    return std::sqrt(sq);
  }
};

struct PhaseStats {
  int phase = 0;
  std::int64_t first_step = 0;
  std::int64_t last_step = 0;
  double peak_xi = 0.0;
  double end_xi = 0.0;

  bool operator==(const PhaseStats&) const = default;
};

struct RunSummary {
  std::int64_t steps = 0;
  int agents = 0;
  std::vector<std::int64_t> trigger_counts;
  std::int64_t total_triggers = 0;
  double trigger_fraction = 0.0;
  double final_xi = 0.0;
  std::vector<PhaseStats> phases;
  double initial_norm_wa = 0.0;
  double sup_norm_wa = 0.0;
  double sup_norm_wc = 0.0;

  bool operator==(const RunSummary&) const = default;
};

// Incremental aggregation; summarize() is this fed with a whole record list.
class SummaryAccumulator {
 public:
  void add(const StepRecord& r) {
    if (summary_.steps == 0) {
      summary_.agents = static_cast<int>(r.agents.size());
      summary_.trigger_counts.assign(r.agents.size(), 0);
      for (const auto& a : r.agents) summary_.initial_norm_wa = std::max(summary_.initial_norm_wa, a.norm_wa);
    } else if (r.k != next_k_) {
      throw ValidationError("summary: expected step " + std::to_string(next_k_) + ", got " +
                            std::to_string(r.k));
    }
    if (static_cast<int>(r.agents.size()) != summary_.agents)
      throw ValidationError("summary: step " + std::to_string(r.k) + " has " +
                            std::to_string(r.agents.size()) + " agents, expected " +
                            std::to_string(summary_.agents));
    next_k_ = r.k + 1;
    ++summary_.steps;
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
      const auto& a = r.agents[i];
      if (a.triggered) {
        ++summary_.trigger_counts[i];
        ++summary_.total_triggers;
      }
      summary_.sup_norm_wa = std::max(summary_.sup_norm_wa, a.norm_wa);
      summary_.sup_norm_wc = std::max(summary_.sup_norm_wc, a.norm_wc);
    }
    const double xi = r.global_xi();
    summary_.final_xi = xi;
    if (summary_.phases.empty() || summary_.phases.back().phase != r.phase)
      summary_.phases.push_back({r.phase, r.k, r.k, xi, xi});
    auto& ph = summary_.phases.back();
    ph.last_step = r.k;
    ph.peak_xi = std::max(ph.peak_xi, xi);
    ph.end_xi = xi;
  }

  RunSummary finish() const {
    if (summary_.steps == 0) throw ValidationError("summary: no records");
    RunSummary out = summary_;
    out.trigger_fraction = static_cast<double>(out.total_triggers) /
                           (static_cast<double>(out.steps) * out.agents);
    return out;
  }

 private:
  RunSummary summary_;
  std::int64_t next_k_ = 0;
};

inline RunSummary summarize(std::span<const StepRecord> records) {
  SummaryAccumulator acc;
  for (const auto& r : records) acc.add(r);
  return acc.finish();
}

// ---------------------------------------------------------------------------
// Engine

struct RunOptions {
  TriggerPolicy policy = TriggerPolicy::event;
  int threads = 1;
  std::optional<std::int64_t> steps;  // overrides the scenario
  bool keep_records = true;
};

struct RunReport {
  GainSummary gains;
  GainReport measured;      // lambda_max = sup_k ||psi||^2 seen during the run
  double max_psi_energy = 0.0;
  std::vector<double> discounted_cost;  // per agent, sum_k beta^k R_i(k) from k = 0
  std::vector<std::int64_t> switch_steps;
  std::vector<FormationPlan> plans;
};

struct RunResult {
  std::vector<StepRecord> records;
  RunSummary summary;
  RunReport report;
};

struct TickView {
  const StepRecord& record;
  const Matrix& xi;   // N x 2m, rows [xi_p, xi_v]
  const Matrix& eps;  // N x 2m, rows [eps_p, eps_v]
  std::span<const TickResult> decisions;
  std::span<const AgentController> controllers;  // after this tick's updates
  const FormationPlan& plan;
  bool switched = false;
};

using Observer = std::function<void(const TickView&)>;

class Simulation {
 public:
  explicit Simulation(Scenario scenario, RunOptions options = {})
      : scenario_(std::move(scenario)), options_(options) {
    const auto diags = validate_scenario(scenario_);
    if (has_errors(diags)) {
      std::string msg = "scenario '" + scenario_.name + "' is invalid:";
      for (const auto& d : diags)
        if (d.severity == Diagnostic::Severity::error) msg += "\n  - " + d.message;
      throw ValidationError(msg);
    }
    rbf_.emplace(scenario_.rbf.build(scenario_.dimension, scenario_.seed));
  }

  const Scenario& scenario() const noexcept { return scenario_; }
  const RbfConfig& rbf() const noexcept { return *rbf_; }

  RunResult run(const Observer& observe = {}) {
    const Scenario& s = scenario_;
    const int n = s.agents();
    const int m = s.dimension;
    const double T = s.T;
    const std::optional<std::int64_t> step_limit = options_.steps ? options_.steps : s.steps;

    std::vector<AgentState> agents;
    agents.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) agents.push_back(AgentState::at_rest(s.initial.row(i).transpose()));
    AgentState leader = AgentState::at_rest(centroid(s.initial));

    std::vector<AgentController> controllers;
    controllers.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) controllers.emplace_back(*rbf_, m, s.controller);

    RunResult result;
    result.report.gains = static_gain_report(s, *rbf_);
    result.report.discounted_cost.assign(static_cast<std::size_t>(n), 0.0);
    SummaryAccumulator acc;

    Matrix xi(n, 2 * m), eps(n, 2 * m);
    std::vector<TickResult> decisions(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));
    std::vector<Vector> desired_p(static_cast<std::size_t>(n)), desired_v(static_cast<std::size_t>(n));

    FormationPlan plan;
    int phase = -1;
    std::int64_t plan_start = 0;
    std::int64_t next_switch = 0;
    double divergence_limit = std::numeric_limits<double>::infinity();
    double discount = 1.0;

    const auto reference = [&](std::int64_t k) {
      Vector r = Vector::Zero(m);
      for (int i = 0; i < n; ++i) r += plan.desired(i, k - plan_start, T).position;
      return Vector(r / n);
    };

    for (std::int64_t k = 0;; ++k) {
      if (step_limit && k >= *step_limit) break;
      bool switched = false;
      if (k == next_switch) {
        if (phase + 1 >= static_cast<int>(s.formations.size())) {
          if (!step_limit) break;
          next_switch = -1;
        } else {
          ++phase;
          PointSet g(n, m);
          for (int i = 0; i < n; ++i) g.row(i) = agents[static_cast<std::size_t>(i)].p.transpose();
          plan = switch_formation(g, s.formations[static_cast<std::size_t>(phase)], k);
          plan_start = k;
          switched = true;
          result.report.switch_steps.push_back(k);
          result.report.plans.push_back(plan);
          const auto& stage = s.formations[static_cast<std::size_t>(phase)];
          const double hold = stage.hold ? *stage.hold : s.hold_factor * plan.t_s;
          const auto hold_steps = static_cast<std::int64_t>(std::ceil(hold / T - 1e-9));
          next_switch = k + std::max<std::int64_t>(1, plan.arrival_steps(T) + hold_steps);
        }
      }

      // Tracking errors from frozen tick-k states.
      for (int i = 0; i < n; ++i) {
        auto d = plan.desired(i, k - plan_start, T);
        const auto& a = agents[static_cast<std::size_t>(i)];
        const TrackingError e = tracking_error(a.p, a.v, leader.p, leader.v, d.position - leader.p,
                                               d.velocity - leader.v);
        xi.row(i).head(m) = e.p.transpose();
        xi.row(i).tail(m) = e.v.transpose();
      }
      for (int i = 0; i < n; ++i) eps.row(i) = disagreement_row(s.topology, xi, i).transpose();

      if (k == 0) divergence_limit = s.divergence_factor * (xi.norm() + 1.0);
      for (int i = 0; i < n; ++i) {
        const double e = xi.row(i).norm();
        if (!std::isfinite(e)) throw RuntimeAbort(k, "non-finite tracking error for agent " + std::to_string(i));
        if (e > divergence_limit)
          throw RuntimeAbort(k, "divergence guard: ||xi_" + std::to_string(i) + "|| = " + std::to_string(e) +
                                    " exceeds " + std::to_string(divergence_limit));
      }

      StepRecord rec;
      rec.k = k;
      rec.phase = phase;
      rec.agents.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        auto& smp = rec.agents[static_cast<std::size_t>(i)];
        const auto& a = agents[static_cast<std::size_t>(i)];
        const auto& st = controllers[static_cast<std::size_t>(i)].state();
        smp.p = a.p;
        smp.v = a.v;
        smp.norm_eps = eps.row(i).norm();
        smp.norm_xi = xi.row(i).norm();
        smp.norm_wa = st.w_actor.norm();
        smp.norm_wc = st.w_critic.norm();
      }

      // Controllers and dynamics, independent per agent.
      const int threads = std::max(1, options_.threads);
      (void)threads;
#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1)
      for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
          decisions[idx] = controllers[idx].tick(eps.row(i).transpose(), k, T, options_.policy);
          const Vector f = nonlinearity(agents[idx], s.disturbance, i + 1);
          agents[idx] = step_agent(agents[idx], decisions[idx].u, f, T);
        } catch (...) {
          failures[idx] = std::current_exception();
        }
      }
      for (auto& f : failures)
        if (f) std::rethrow_exception(f);

      // Leader follows the centroid of the planned trajectories.
      const Vector v_next = (reference(k + 2) - reference(k + 1)) / T;
      leader = step_leader(leader, (v_next - leader.v) / T, T);

      for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const auto& d = decisions[idx];
        auto& smp = rec.agents[idx];
        smp.u = d.u;
        smp.triggered = d.triggered;
        const auto& a = agents[idx];
        if (!a.p.allFinite() || !a.v.allFinite())
          throw RuntimeAbort(k, "non-finite state for agent " + std::to_string(i));
        if (a.p.cwiseAbs().maxCoeff() > s.workspace_guard)
          throw RuntimeAbort(k, "agent " + std::to_string(i) + " left the sanity bound");
        result.report.max_psi_energy = std::max(result.report.max_psi_energy, d.psi_energy);
        result.report.discounted_cost[idx] += discount * utility(eps.row(i).transpose(), d.u);
      }
      discount *= s.controller.beta;

      acc.add(rec);
      if (observe) observe(TickView{rec, xi, eps, decisions, controllers, plan, switched});
      if (options_.keep_records) result.records.push_back(std::move(rec));
    }

    result.summary = acc.finish();
    result.report.measured = validate_gains(s.controller.mu_critic, s.controller.mu_actor, T,
                                            result.report.max_psi_energy);
    return result;
  }

  FormationPlan switch_formation(const PointSet& g, const FormationStage& stage,
                                 std::int64_t k) const {
    try {
      return plan_switch(g, stage.shape, scenario_.plan_options());
    } catch (const ValidationError& e) {
      throw RuntimeAbort(k, "switch to '" + stage.name + "' is infeasible: " + e.what());
    }
  }

 private:
  Scenario scenario_;
  RunOptions options_;
  std::optional<RbfConfig> rbf_;
};

inline RunResult run(const Scenario& scenario, RunOptions options = {},
                     const Observer& observe = {}) {
  return Simulation(scenario, options).run(observe);
}

// Identical run with the trigger forced on every step.
inline RunResult time_triggered_baseline(const Scenario& scenario, RunOptions options = {},
                                         const Observer& observe = {}) {
  options.policy = TriggerPolicy::always;
  return run(scenario, options, observe);
}

// Plans a switch from the agents' current positions to `next_shape`.
inline FormationPlan switch_formation(const Scenario& scenario, const PointSet& current,
                                      const FormationStage& next_shape) {
  return plan_switch(current, next_shape.shape, scenario.plan_options());
}

}  // namespace uavswarm
