#pragma once

// Subcommand bodies for the uavswarm tool. Each returns the process exit
// code: 0 ok, 1 validation failure, 2 runtime abort.

#include "uavswarm/log_io.hpp"
#include "uavswarm/scenario_io.hpp"
#include "uavswarm/sim_engine.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

namespace uavswarm {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  bool baseline = false;
  int threads = 1;
  std::string out;  // directory for assign/run, file for summarize (stdout if empty)
};

namespace detail {

inline std::string slug(const std::string& name) {
  std::string s;
  for (char c : name) s += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return s;
}

inline std::filesystem::path out_dir(const CommandOptions& o) {
  std::filesystem::path p = o.out.empty() ? std::filesystem::path("out") : std::filesystem::path(o.out);
  std::filesystem::create_directories(p);
  return p;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  return f;
}

inline Scenario load_with_overrides(const std::string& path, const CommandOptions& o) {
  Scenario s = load_scenario(path);
  if (o.seed) s.seed = *o.seed;
  if (o.steps) {
    if (*o.steps < 1) throw ValidationError("--steps must be >= 1");
    s.steps = *o.steps;
  }
  return s;
}

inline void print_gain(std::ostream& out, const char* label, const GainReport& g) {
  out << "  " << label << ": lambda_max=" << format_double(g.lambda_max)
      << " bound=" << format_double(g.bound) << " ordering " << (g.ordering_ok ? "ok" : "VIOLATED")
      << ", step " << (g.step_ok ? "ok" : "exceeds bound") << '\n';
}

}  // namespace detail

inline int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  Scenario s;
  try {
    s = load_scenario(path);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  const auto diags = validate_scenario(s);
  for (const auto& d : diags)
    (d.severity == Diagnostic::Severity::error ? err << "error: " : out << "warning: ") << d.message << '\n';
  if (has_errors(diags)) {
    err << path << ": invalid\n";
    return kExitValidation;
  }
  const RbfConfig rbf = s.rbf.build(s.dimension, s.seed);
  const auto gains = static_gain_report(s, rbf);
  out << path << ": ok (" << s.agents() << " agents, " << s.formations.size() << " formations, "
      << rbf.nodes() << " rbf nodes)\n";
  out << "gain conditions:\n";
  detail::print_gain(out, "worst case (lambda = s)", gains.worst_case);
  detail::print_gain(out, "center peak", gains.center_peak);
  return kExitOk;
}

inline int cmd_assign(const std::string& path, const CommandOptions& opts, std::ostream& out,
                      std::ostream& err) {
  try {
    const Scenario s = detail::load_with_overrides(path, opts);
    const auto diags = validate_scenario(s);
    for (const auto& d : diags)
      if (d.severity == Diagnostic::Severity::error) err << "error: " << d.message << '\n';
    if (has_errors(diags)) return kExitValidation;
    const auto plans = plan_sequence(s);
    const auto dir = detail::out_dir(opts);
    for (std::size_t i = 0; i < plans.size(); ++i) {
      const auto& stage = s.formations[i];
      const std::string base = "plan_" + std::to_string(i) + "_" + detail::slug(stage.name);
      {
        auto f = detail::open_out(dir / (base + ".json"));
        f << plan_json(plans[i], stage.name).dump(2) << '\n';
      }
      {
        auto f = detail::open_out(dir / (base + "_trajectory.csv"));
        write_trajectory_csv(f, plans[i], s.T);
      }
      out << base << ": cost=" << format_double(plans[i].total_cost)
          << " rho=" << format_double(plans[i].scale) << " t_s=" << format_double(plans[i].t_s) << '\n';
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

inline int cmd_run(const std::string& path, const CommandOptions& opts, std::ostream& out,
                   std::ostream& err) {
  Scenario s;
  try {
    s = detail::load_with_overrides(path, opts);
    const auto diags = validate_scenario(s);
    for (const auto& d : diags)
      (d.severity == Diagnostic::Severity::error ? err << "error: " : err << "warning: ") << d.message << '\n';
    if (has_errors(diags)) return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  const auto dir = detail::out_dir(opts);
  const auto one = [&](TriggerPolicy policy, const std::string& prefix) {
    RunOptions ro;
    ro.policy = policy;
    ro.threads = opts.threads;
    ro.keep_records = false;
    auto log = detail::open_out(dir / (prefix + "log.csv"));
    LogWriter w(log, s.dimension);
    RunResult r = run(s, ro, [&](const TickView& v) { w.write(v.record); });
    auto sum = detail::open_out(dir / (prefix + "summary.json"));
    sum << summary_text(r.summary);
    return r;
  };

  try {
    RunResult event = one(TriggerPolicy::event, "");
    std::optional<BaselineComparison> cmp;
    if (opts.baseline) {
      RunResult base = one(TriggerPolicy::always, "baseline_");
      cmp = BaselineComparison{event.summary.total_triggers, base.summary.total_triggers,
                               base.summary.trigger_fraction};
    }
    {
      auto f = detail::open_out(dir / "report.json");
      f << report_json(s, event, "event", cmp).dump(2) << '\n';
    }
    out << "steps=" << event.summary.steps << " agents=" << event.summary.agents
        << " trigger_fraction=" << format_double(event.summary.trigger_fraction)
        << " (reference " << format_double(kReferenceUpdateRatio) << ")"
        << " final_xi=" << format_double(event.summary.final_xi) << '\n';
    if (cmp)
      out << "event/time update ratio=" << format_double(cmp->ratio()) << " (" << cmp->event_triggers
          << "/" << cmp->time_triggers << ")\n";
    if (!event.report.gains.worst_case.ok())
      err << "warning: worst-case gain condition not met (bound "
          << format_double(event.report.gains.worst_case.bound) << ")\n";
    return kExitOk;
  } catch (const RuntimeAbort& e) {
    err << "runtime abort at " << e.what() << '\n';
    return kExitRuntime;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

inline int cmd_summarize(const std::string& log_path, const CommandOptions& opts, std::ostream& out,
                         std::ostream& err) {
  try {
    std::ifstream in(log_path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + log_path + "'");
    const ParsedLog log = read_log(in);
    const std::string text = summary_text(summarize(log.records));
    if (opts.out.empty()) {
      out << text;
    } else {
      auto f = detail::open_out(opts.out);
      f << text;
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << log_path << ": " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace uavswarm
