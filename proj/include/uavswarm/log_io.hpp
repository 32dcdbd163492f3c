#pragma once

// Step log (CSV), summary and report documents (JSON), plan files.
//
// Log columns, fixed:
//   k,agent,px,py[,pz],vx,vy[,vz],ux,uy[,uz],triggered,norm_eps,norm_xi,norm_Wa,norm_Wc,phase
// Floating point values use the shortest representation that round-trips.

#include "uavswarm/sim_engine.hpp"

#include <json.hpp>

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace uavswarm {

inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, end);
}

inline std::string log_header(int m) {
  static const char* axes[] = {"x", "y", "z"};
  std::string h = "k,agent";
  for (const char* q : {"p", "v", "u"})
    for (int c = 0; c < m; ++c) h += std::string(",") + q + axes[c];
  h += ",triggered,norm_eps,norm_xi,norm_Wa,norm_Wc,phase";
  return h;
}

inline int log_columns(int m) { return 2 + 3 * m + 6; }

class LogWriter {
 public:
  LogWriter(std::ostream& out, int m) : out_(out), m_(m) { out_ << log_header(m) << '\n'; }

  void write(const StepRecord& r) {
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
      const auto& a = r.agents[i];
      line_.clear();
      line_ += std::to_string(r.k);
      line_ += ',';
      line_ += std::to_string(i);
      for (const Vector* v : {&a.p, &a.v, &a.u})
        for (int c = 0; c < m_; ++c) put((*v)(c));
      line_ += a.triggered ? ",1" : ",0";
      put(a.norm_eps);
      put(a.norm_xi);
      put(a.norm_wa);
      put(a.norm_wc);
      line_ += ',';
      line_ += std::to_string(r.phase);
      line_ += '\n';
      out_ << line_;
    }
  }

 private:
  void put(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw Error("log: number conversion failed");
    line_ += ',';
    line_.append(buf, end);
  }

  std::ostream& out_;
  int m_;
  std::string line_;
};

inline void write_log(std::ostream& out, std::span<const StepRecord> records, int m) {
  LogWriter w(out, m);
  for (const auto& r : records) w.write(r);
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
T parse_field(std::string_view s, std::size_t line, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("log line " + std::to_string(line) + ": bad " + what + " '" +
                          std::string(s) + "'");
  return v;
}

}  // namespace detail

struct ParsedLog {
  int dimension = 2;
  std::vector<StepRecord> records;
};

// Strict reader: header must match, rows are k-major with agents 0..N-1.
// A log that ends mid-step is reported with the missing agents.
inline ParsedLog read_log(std::istream& in) {
  ParsedLog out;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("log: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line == log_header(2)) out.dimension = 2;
  else if (line == log_header(3)) out.dimension = 3;
  else throw ValidationError("log: header does not match the step-log schema; expected '" +
                             log_header(2) + "' or the 3-D variant");
  const int m = out.dimension;
  const auto cols = static_cast<std::size_t>(log_columns(m));

  std::optional<int> agents;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ValidationError("log line " + std::to_string(lineno) + ": empty row");
    const auto f = detail::split_csv(line);
    if (f.size() != cols)
      throw ValidationError("log line " + std::to_string(lineno) + ": " + std::to_string(f.size()) +
                            " fields, expected " + std::to_string(cols) + " (truncated row?)");
    const auto k = detail::parse_field<std::int64_t>(f[0], lineno, "step");
    const auto agent = detail::parse_field<int>(f[1], lineno, "agent");

    if (agent == 0) {
      if (!out.records.empty()) {
        const auto& prev = out.records.back();
        if (!agents) agents = static_cast<int>(prev.agents.size());
        if (static_cast<int>(prev.agents.size()) != *agents)
          throw ValidationError("log: step " + std::to_string(prev.k) + " is missing agents " +
                                std::to_string(prev.agents.size()) + ".." + std::to_string(*agents - 1));
      }
      const std::int64_t expected = out.records.empty() ? 0 : out.records.back().k + 1;
      if (k != expected)
        throw ValidationError("log line " + std::to_string(lineno) + ": step " + std::to_string(k) +
                              ", expected " + std::to_string(expected) +
                              (k > expected ? " (missing steps " + std::to_string(expected) + ".." +
                                                  std::to_string(k - 1) + ")"
                                            : ""));
      StepRecord r;
      r.k = k;
      out.records.push_back(std::move(r));
    } else {
      if (out.records.empty() || out.records.back().k != k ||
          static_cast<int>(out.records.back().agents.size()) != agent ||
          (agents && agent >= *agents))
        throw ValidationError("log line " + std::to_string(lineno) + ": unexpected row (step " +
                              std::to_string(k) + ", agent " + std::to_string(agent) + ")");
    }

    AgentSample a;
    std::size_t c = 2;
    for (Vector* v : {&a.p, &a.v, &a.u}) {
      v->resize(m);
      for (int d = 0; d < m; ++d) (*v)(d) = detail::parse_field<double>(f[c++], lineno, "number");
    }
    const auto trig = detail::parse_field<int>(f[c++], lineno, "triggered flag");
    if (trig != 0 && trig != 1)
      throw ValidationError("log line " + std::to_string(lineno) + ": triggered must be 0 or 1");
    a.triggered = trig == 1;
    a.norm_eps = detail::parse_field<double>(f[c++], lineno, "number");
    a.norm_xi = detail::parse_field<double>(f[c++], lineno, "number");
    a.norm_wa = detail::parse_field<double>(f[c++], lineno, "number");
    a.norm_wc = detail::parse_field<double>(f[c++], lineno, "number");
    const auto phase = detail::parse_field<int>(f[c++], lineno, "phase");
    auto& rec = out.records.back();
    if (agent == 0) rec.phase = phase;
    else if (rec.phase != phase)
      throw ValidationError("log line " + std::to_string(lineno) + ": phase differs within step " +
                            std::to_string(k));
    rec.agents.push_back(std::move(a));
  }

  if (out.records.empty()) throw ValidationError("log: no data rows");
  const auto& last = out.records.back();
  const int n = agents.value_or(static_cast<int>(last.agents.size()));
  if (static_cast<int>(last.agents.size()) != n)
    throw ValidationError("log: truncated; step " + std::to_string(last.k) + " is missing agents " +
                          std::to_string(last.agents.size()) + ".." + std::to_string(n - 1));
  return out;
}

// ---------------------------------------------------------------------------
// Documents

using ojson = nlohmann::ordered_json;

inline ojson to_json(const Vector& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline ojson summary_json(const RunSummary& s) {
  ojson j;
  j["steps"] = s.steps;
  j["agents"] = s.agents;
  j["total_triggers"] = s.total_triggers;
  j["trigger_fraction"] = s.trigger_fraction;
  j["trigger_counts"] = s.trigger_counts;
  j["final_xi"] = s.final_xi;
  j["initial_norm_Wa"] = s.initial_norm_wa;
  j["sup_norm_Wa"] = s.sup_norm_wa;
  j["sup_norm_Wc"] = s.sup_norm_wc;
  ojson phases = ojson::array();
  for (const auto& p : s.phases) {
    ojson q;
    q["phase"] = p.phase;
    q["first_step"] = p.first_step;
    q["last_step"] = p.last_step;
    q["peak_xi"] = p.peak_xi;
    q["end_xi"] = p.end_xi;
    q["end_over_peak"] = p.peak_xi > 0.0 ? p.end_xi / p.peak_xi : 0.0;
    phases.push_back(std::move(q));
  }
  j["phases"] = std::move(phases);
  return j;
}

inline std::string summary_text(const RunSummary& s) { return summary_json(s).dump(2) + "\n"; }

inline ojson gain_json(const GainReport& g) {
  ojson j;
  j["ordering_ok"] = g.ordering_ok;
  j["step_ok"] = g.step_ok;
  j["bound"] = std::isfinite(g.bound) ? ojson(g.bound) : ojson(nullptr);
  j["lambda_max"] = g.lambda_max;
  return j;
}

inline ojson plan_json(const FormationPlan& p, const std::string& name) {
  ojson j;
  j["formation"] = name;
  j["rho"] = p.scale;
  j["translation"] = to_json(p.translation);
  j["t_s"] = p.t_s;
  j["total_cost"] = p.total_cost;
  j["assignment"] = p.assignment;
  ojson agents = ojson::array();
  for (Eigen::Index i = 0; i < p.start.rows(); ++i) {
    ojson a;
    a["agent"] = i;
    a["slot"] = p.assignment[static_cast<std::size_t>(i)];
    a["start"] = to_json(p.start.row(i).transpose());
    a["target"] = to_json(p.target_of(static_cast<int>(i)));
    agents.push_back(std::move(a));
  }
  j["agents"] = std::move(agents);
  return j;
}

struct BaselineComparison {
  std::int64_t event_triggers = 0;
  std::int64_t time_triggers = 0;
  double time_fraction = 0.0;
  double ratio() const {
    return time_triggers > 0 ? static_cast<double>(event_triggers) / static_cast<double>(time_triggers) : 0.0;
  }
};

inline constexpr double kReferenceUpdateRatio = 0.27;

inline ojson report_json(const Scenario& s, const RunResult& r, std::string_view policy,
                         const std::optional<BaselineComparison>& baseline) {
  ojson j;
  j["scenario"] = s.name;
  j["policy"] = policy;
  j["seed"] = s.seed;
  j["steps"] = r.summary.steps;
  j["agents"] = r.summary.agents;
  j["trigger_fraction"] = r.summary.trigger_fraction;
  j["reference_update_ratio"] = kReferenceUpdateRatio;
  j["final_xi"] = r.summary.final_xi;
  ojson gains;
  gains["worst_case"] = gain_json(r.report.gains.worst_case);
  gains["center_peak"] = gain_json(r.report.gains.center_peak);
  gains["measured"] = gain_json(r.report.measured);
  j["gains"] = std::move(gains);
  j["max_psi_energy"] = r.report.max_psi_energy;
  double mean_cost = 0.0;
  for (double c : r.report.discounted_cost) mean_cost += c;
  if (!r.report.discounted_cost.empty()) mean_cost /= static_cast<double>(r.report.discounted_cost.size());
  j["discounted_cost_mean"] = mean_cost;
  j["switch_steps"] = r.report.switch_steps;
  ojson plans = ojson::array();
  for (std::size_t i = 0; i < r.report.plans.size(); ++i) {
    const auto& p = r.report.plans[i];
    ojson q;
    q["formation"] = i < s.formations.size() ? s.formations[i].name : "";
    q["rho"] = p.scale;
    q["t_s"] = p.t_s;
    q["total_cost"] = p.total_cost;
    plans.push_back(std::move(q));
  }
  j["plans"] = std::move(plans);
  if (baseline) {
    ojson b;
    b["event_triggers"] = baseline->event_triggers;
    b["time_triggers"] = baseline->time_triggers;
    b["time_trigger_fraction"] = baseline->time_fraction;
    b["event_over_time_ratio"] = baseline->ratio();
    j["baseline"] = std::move(b);
  }
  return j;
}

// k,agent,x,y[,z] from k = 0 through arrival.
inline void write_trajectory_csv(std::ostream& out, const FormationPlan& p, double T) {
  static const char* axes[] = {"x", "y", "z"};
  const auto m = p.start.cols();
  out << "k,agent";
  for (Eigen::Index c = 0; c < m; ++c) out << ',' << axes[c];
  out << '\n';
  const std::int64_t steps = p.arrival_steps(T);
  for (std::int64_t k = 0; k <= steps; ++k)
    for (Eigen::Index i = 0; i < p.start.rows(); ++i) {
      const auto pt = p.desired(static_cast<int>(i), k, T);
      out << k << ',' << i;
      for (Eigen::Index c = 0; c < m; ++c) out << ',' << format_double(pt.position(c));
      out << '\n';
    }
}

}  // namespace uavswarm
