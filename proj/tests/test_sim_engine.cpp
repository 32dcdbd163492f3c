#include "uavswarm/scenario_io.hpp"
#include "uavswarm/shapes.hpp"
#include "uavswarm/sim_engine.hpp"

#include <gtest/gtest.h>

using namespace uavswarm;

namespace {

Scenario fixture(const char* name) {
  return load_scenario(std::string(UAVSWARM_SCENARIOS) + "/" + name + ".json");
}

bool same_records(const std::vector<StepRecord>& a, const std::vector<StepRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].k != b[k].k || a[k].phase != b[k].phase || a[k].agents.size() != b[k].agents.size()) return false;
    for (std::size_t i = 0; i < a[k].agents.size(); ++i) {
      const auto& x = a[k].agents[i];
      const auto& y = b[k].agents[i];
      if (x.p != y.p || x.v != y.v || x.u != y.u || x.triggered != y.triggered || x.norm_eps != y.norm_eps ||
          x.norm_xi != y.norm_xi || x.norm_wa != y.norm_wa || x.norm_wc != y.norm_wc)
        return false;
    }
  }
  return true;
}

StepRecord synthetic(std::int64_t k, std::vector<bool> trig, int phase = 0) {
  StepRecord r;
  r.k = k;
  r.phase = phase;
  for (bool t : trig) {
    AgentSample a;
    a.p = a.v = a.u = Vector::Zero(2);
    a.triggered = t;
    a.norm_xi = 1.0;
    r.agents.push_back(a);
  }
  return r;
}

}  // namespace

TEST(Engine, TwoAgentEquilibrium) {
  Scenario s = fixture("smoke2");
  s.controller.actor_init = 0.0;
  s.controller.critic_init = 0.0;
  s.disturbance.amplitude = 0.0;
  const auto r = run(s);
  ASSERT_EQ(r.records.size(), 500u);
  for (const auto& rec : r.records) ASSERT_LE(rec.global_xi(), 1e-9) << rec.k;
  EXPECT_EQ(r.report.plans.front().total_cost, 0.0);
  EXPECT_EQ(r.report.plans.front().t_s, 0.0);
}

TEST(Engine, Deterministic) {
  const Scenario s = fixture("desk16");
  const auto a = run(s);
  const auto b = run(s);
  EXPECT_TRUE(same_records(a.records, b.records));
  EXPECT_EQ(a.summary, b.summary);
}

TEST(Engine, ThreadCountDoesNotChangeResult) {
  const Scenario s = fixture("desk16");
  RunOptions o;
  o.threads = 4;
  EXPECT_TRUE(same_records(run(s).records, run(s, o).records));
}

TEST(Engine, SummaryMatchesRecords) {
  const auto r = run(fixture("desk16"));
  EXPECT_EQ(summarize(r.records), r.summary);
}

TEST(Engine, BaselineDominance) {
  const Scenario s = fixture("desk16");
  const auto ev = run(s);
  const auto tt = time_triggered_baseline(s);
  EXPECT_EQ(tt.summary.trigger_fraction, 1.0);
  EXPECT_LE(ev.summary.total_triggers, tt.summary.total_triggers);
  for (std::size_t i = 0; i < ev.summary.trigger_counts.size(); ++i)
    EXPECT_LE(ev.summary.trigger_counts[i], tt.summary.trigger_counts[i]);
}

TEST(Engine, TriggerHistoriesStartAtZero) {
  const Scenario s = fixture("desk16");
  std::vector<std::vector<std::int64_t>> histories;
  run(s, {}, [&](const TickView& v) {
    histories.clear();
    for (const auto& c : v.controllers) histories.push_back(c.trigger().history);
  });
  ASSERT_EQ(histories.size(), 16u);
  for (const auto& h : histories) {
    ASSERT_FALSE(h.empty());
    EXPECT_EQ(h.front(), 0);
    EXPECT_TRUE(std::is_sorted(h.begin(), h.end()));
    EXPECT_EQ(std::adjacent_find(h.begin(), h.end()), h.end());
  }
}

TEST(Engine, SwitchTipDecays) {
  const auto r = run(fixture("desk16"));
  ASSERT_EQ(r.summary.phases.size(), 2u);
  const auto& before = r.summary.phases[0];
  const auto& after = r.summary.phases[1];
  EXPECT_GT(after.peak_xi, before.end_xi);
  EXPECT_LT(after.end_xi, before.end_xi);
  EXPECT_EQ(r.report.switch_steps.size(), 2u);
}

TEST(Engine, IdenticalFormationSwitch) {
  Scenario s = fixture("smoke2");
  s.formations.push_back(s.formations.front());
  s.formations[0].hold = 1.0;
  s.steps = 300;
  s.controller.actor_init = 0.0;
  s.controller.critic_init = 0.0;
  const auto r = run(s);
  ASSERT_EQ(r.report.plans.size(), 2u);
  EXPECT_EQ(r.report.switch_steps[1], 100);
  EXPECT_EQ(r.report.plans[1].assignment, r.report.plans[0].assignment);
  EXPECT_LE(r.report.plans[1].total_cost, 1e-12);
  for (const auto& rec : r.records) ASSERT_LE(rec.global_xi(), 1e-9) << rec.k;
}

TEST(Engine, ThreeDimensions) {
  Scenario s;
  s.topology = circulant_topology(4, 1);
  s.dimension = 3;
  s.workspace = {Vector::Constant(3, -5), Vector::Constant(3, 5)};
  s.initial = shapes::circle(4, 1.0, 3);
  s.formations = {{"wide", shapes::circle(4, 2.0, 3), 1.0}};
  s.steps = 400;
  const auto r = run(s);
  EXPECT_EQ(r.records.front().agents.front().p.size(), 3);
  EXPECT_LT(r.summary.final_xi, r.summary.phases.front().peak_xi);
}

TEST(Engine, RunsUntilLastHoldWithoutStepLimit) {
  Scenario s = fixture("desk16");
  const auto r = run(s);
  const auto& plans = r.report.plans;
  const std::int64_t expected = r.report.switch_steps.back() + plans.back().arrival_steps(s.T) + 400;
  EXPECT_EQ(r.summary.steps, expected);
}

TEST(Engine, DivergenceGuard) {
  Scenario s = fixture("desk16");
  s.controller.alpha_p = 1e4;
  s.controller.alpha_v = 1e4;
  try {
    run(s);
    FAIL();
  } catch (const RuntimeAbort& e) {
    EXPECT_GT(e.step(), 0);
    EXPECT_LT(e.step(), 200);
  }
}

TEST(Engine, ValidationListsEveryProblem) {
  Scenario s = fixture("desk16");
  s.T = 0.0;
  s.v_max = -1.0;
  s.formations[1].shape = shapes::circle(15, 1.0);
  const auto d = validate_scenario(s);
  int errors = 0;
  for (const auto& x : d) errors += x.severity == Diagnostic::Severity::error;
  EXPECT_GE(errors, 3);
  try {
    Simulation sim(s);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("T must be"), std::string::npos);
    EXPECT_NE(w.find("v_max"), std::string::npos);
    EXPECT_NE(w.find("formation 1"), std::string::npos);
  }
}

TEST(Engine, GainWarningOnly) {
  const auto d = validate_scenario(fixture("desk16"));
  EXPECT_FALSE(has_errors(d));
  bool warned = false;
  for (const auto& x : d) warned = warned || x.message.find("worst-case") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(Engine, DisconnectedTopologyRejected) {
  Scenario s = fixture("smoke2");
  IntMatrix w = IntMatrix::Zero(2, 2);
  Eigen::VectorXi b(2);
  b << 1, 0;
  s.topology = build_topology(w, b);
  const auto d = validate_scenario(s);
  EXPECT_TRUE(has_errors(d));
}

TEST(Engine, NearHalfKappaIsNotALimitCase) {
  // the coefficient tends to 1 as kappa -> 1/2, so triggers at switches are not forced
  EXPECT_NEAR(threshold_coefficient(0.5 + 1e-9), 1.0, 1e-8);
  EXPECT_NEAR(threshold_coefficient(0.65), (1 - 2 * 0.65 * 0.65) / (2 * 0.65 * 0.65), 1e-15);
  EXPECT_GT(threshold_coefficient(0.51), threshold_coefficient(0.65));
}

TEST(Engine, TriggerCountMonotoneInKappa) {
  // eps sequence of one agent, replayed open loop
  const Scenario s = fixture("desk16");
  std::vector<Vector> eps;
  run(s, {}, [&](const TickView& v) { eps.push_back(v.eps.row(3).transpose()); });
  const RbfConfig rbf = s.rbf.build(2, s.seed);
  std::int64_t prev = -1;
  for (double kappa : {0.70, 0.68, 0.65, 0.62, 0.58, 0.55, 0.52, 0.501}) {
    ControllerParams p = s.controller;
    p.kappa = kappa;
    const auto ac = ActorCriticState::initial(rbf.nodes(), 2, p);
    TriggerState trig;
    for (std::size_t k = 0; k < eps.size(); ++k)
      control(eps[k], rbf.basis(eps[k]), ac, trig, static_cast<std::int64_t>(k));
    const auto count = static_cast<std::int64_t>(trig.history.size());
    if (prev >= 0) {
      EXPECT_LE(count, prev) << kappa;
    }
    prev = count;
  }
}

TEST(Summarize, Examples) {
  std::vector<StepRecord> one{synthetic(0, {false})};
  EXPECT_EQ(summarize(one).trigger_fraction, 0.0);
  std::vector<StepRecord> all{synthetic(0, {true, true}), synthetic(1, {true, true})};
  EXPECT_EQ(summarize(all).trigger_fraction, 1.0);
  std::vector<StepRecord> mix{synthetic(0, {true, true, true}), synthetic(1, {false, true, false}),
                              synthetic(2, {false, false, false}, 1), synthetic(3, {true, false, false}, 1)};
  const auto s = summarize(mix);
  EXPECT_EQ(s.trigger_counts, (std::vector<std::int64_t>{2, 2, 1}));
  EXPECT_EQ(s.total_triggers, 5);
  EXPECT_DOUBLE_EQ(s.trigger_fraction, 5.0 / 12.0);
  ASSERT_EQ(s.phases.size(), 2u);
  EXPECT_EQ(s.phases[1].first_step, 2);
  EXPECT_EQ(s.phases[1].last_step, 3);
  EXPECT_THROW(summarize(std::vector<StepRecord>{}), ValidationError);
  std::vector<StepRecord> gap{synthetic(0, {true}), synthetic(2, {true})};
  EXPECT_THROW(summarize(gap), ValidationError);
}
