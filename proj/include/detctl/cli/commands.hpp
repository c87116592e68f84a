#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "detctl/cli/config.hpp"
#include "detctl/cli/suites.hpp"

#ifndef DETCTL_VERSION
#define DETCTL_VERSION "0.0.0"
#endif

namespace detctl::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kScientificFailure = 1, kUsageError = 2 };

struct Context {
  fs::path out_dir = "out";
  fs::path preset_dir;
  int jobs = 1;
  std::ostream* log = &std::cout;
};

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json theorem_json(const TheoremCheck& t) {
  return {{"applicable", t.applicable}, {"holds", t.holds}, {"exponent", optional_number(t.exponent)},
          {"conditions", t.detail}};
}

}  // namespace detail

inline json to_json(const ConditionReport& r) {
  return {{"open_loop", r.open_loop},
          {"c", detail::optional_number(r.c)},
          {"h", detail::optional_number(r.h)},
          {"mu_c2h2", detail::optional_number(r.mu_c2h2)},
          {"absorbing", detail::theorem_json(r.existence)},
          {"interpolant_decay", detail::theorem_json(r.interpolant)},
          {"volume_decay", detail::theorem_json(r.volume)},
          {"volume_printed_hypothesis", r.volume_printed_hypothesis},
          {"delta_decay", detail::theorem_json(r.delta)}};
}

inline json to_json(const PropertyResult& p) {
  json j{{"name", p.name}, {"pass", p.pass}, {"worst_ratio", p.worst_ratio}, {"trials", p.trials}};
  if (p.informational) j["informational"] = true;
  if (!p.note.empty()) j["note"] = p.note;
  return j;
}

inline json to_json(const SuiteReport& r) {
  json props = json::array();
  for (const PropertyResult& p : r.properties) props.push_back(to_json(p));
  return {{"suite", r.suite}, {"seed", r.seed}, {"pass", r.pass()}, {"properties", props}};
}

/// Trajectory CSV: every `every`-th record plus the last one.
inline std::string trajectory_csv(const TrajectoryRecord& r, int every) {
  std::string out = "t,l2,h1x,h1,l4p4,gamma2,ih_l2,energy_residual\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i % static_cast<std::size_t>(every) != 0 && i + 1 != r.size()) continue;
    for (const auto* col : {&r.times, &r.l2, &r.h1x, &r.h1, &r.l4p4, &r.gamma2, &r.ih_l2, &r.energy_residual}) {
      if (col != &r.times) out += ',';
      detail::append_number(out, (*col)[i]);
    }
    out += '\n';
  }
  return out;
}

struct RunOutcome {
  json summary;
  bool pass = true;
  std::optional<TrajectoryRecord> trajectory;
};

/// Runs one config and evaluates every verdict whose hypotheses hold.
inline RunOutcome evaluate_run(const RunConfig& cfg) {
  RunOutcome out;
  const ConditionReport rep = check_conditions(cfg.params);
  json& s = out.summary;
  s["name"] = cfg.name;
  s["conditions"] = to_json(rep);

  TrajectoryRecord traj;
  try {
    traj = simulate(cfg.sim, cfg.params);
    s["status"] = "completed";
  } catch (const IntegrationError& e) {
    traj = e.partial();
    s["status"] = "blow-up";
    s["failure"] = {{"kind", e.kind() == IntegrationFailure::NonFinite ? "non-finite" : "stability-limit"},
                    {"time", e.time()},
                    {"message", e.what()}};
    out.pass = false;
  }
  s["records"] = traj.size();
  if (traj.size() == 0) {
    out.trajectory = std::move(traj);
    return out;
  }

  std::optional<double> default_t0;
  if (rep.interpolant.holds) default_t0 = 1.0 / *rep.interpolant.exponent;
  const double t0 = cfg.fit_t0.value_or(default_t0.value_or(0.0));
  std::optional<DecayFit> fit;
  try {
    fit = fit_decay_rate(traj, t0);
    s["fit"] = {{"rate", fit->rate}, {"t0", fit->t0}, {"t1", fit->t1}, {"residual", fit->residual},
                {"samples", fit->samples}};
  } catch (const NoFitError& e) {
    s["fit"] = nullptr;
    s["fit_error"] = e.what();
  }

  double worst = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    worst = std::max(worst, traj.energy_residual[i]);
    scale = std::max(scale, traj.h1[i] * traj.h1[i]);
  }
  const AbsorbingBounds ab = absorbing_bounds(cfg.params);
  const AbsorbingMonitor mon = absorbing_monitor(traj);
  s["measures"] = {{"t_final", traj.times.back()},
                   {"l2_initial", traj.l2.front()},
                   {"l2_final", traj.l2.back()},
                   {"h1x_initial", traj.h1x.front()},
                   {"h1x_final", traj.h1x.back()},
                   {"energy_residual_max", worst},
                   {"energy_scale", scale},
                   {"R0_sq", ab.R0_sq},
                   {"R1_sq", ab.R1_sq},
                   {"t_half", mon.t_half},
                   {"sup_l2_sq_after_t_half", mon.sup_l2_sq},
                   {"sup_h1x_sq_after_t_half", mon.sup_h1x_sq}};

  json v = json::object();
  const bool complete = s["status"] == "completed";
  if (rep.interpolant.holds) {
    const double r = *rep.interpolant.exponent;
    v["decay_bound_thm51"] = verify_decay_bound(traj, r, cfg.slack);
    if (complete && traj.times.back() >= 30.0 / r * (1.0 - 1e-12)) v["h1_decay"] = verify_h1_decay(traj, 1e-3);
  }
  if (rep.delta.holds) v["decay_bound_thm71"] = verify_decay_bound(traj, *rep.delta.exponent, cfg.slack);
  if (rep.volume.holds && *rep.volume.exponent > 0.0) {
    v["decay_rate_thm21"] = fit.has_value() && fit->rate >= (1.0 - cfg.slack) * *rep.volume.exponent;
  }
  if (rep.existence.holds && traj.l2.front() * traj.l2.front() <= 4.0 * ab.R0_sq * (1.0 + 1e-12))
    v["absorbing_bound"] = mon.sup_l2_sq <= (1.0 + cfg.slack) * ab.R0_sq;
  v["energy_identity"] = worst <= 1e-3 * scale;
  s["verdicts"] = v;
  for (const auto& [k, ok] : v.items()) out.pass = out.pass && ok.get<bool>();
  s["pass"] = out.pass;
  out.trajectory = std::move(traj);
  return out;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Loads a run config from a config file, a preset name, or a manifest.
inline RunConfig load_run_config(const std::string& arg, const Context& ctx) {
  const fs::path path = resolve_config(arg, ctx.preset_dir);
  json j = read_json_file(path);
  if (j.is_object() && j.contains("manifest_version")) {
    if (!j.contains("config") || j.value("command", "") != "simulate")
      throw ConfigError(path.string(), "manifest does not describe a simulate run");
    j = j["config"];
  }
  return parse_run_config(j, path.stem().string());
}

inline int cmd_simulate(const std::string& arg, const Context& ctx) {
  RunConfig cfg;
  try {
    cfg = load_run_config(arg, ctx);
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  }
  const std::string started = detail::utc_now();
  RunOutcome out = evaluate_run(cfg);
  const fs::path csv = ctx.out_dir / (cfg.name + ".csv");
  const fs::path summary = ctx.out_dir / (cfg.name + ".summary.json");
  const fs::path manifest = ctx.out_dir / (cfg.name + ".manifest.json");
  detail::write_text(csv, trajectory_csv(*out.trajectory, cfg.output_every));
  detail::write_text(summary, dump(out.summary));

  json seed = nullptr;
  if (const auto* rb = std::get_if<RandomBand>(&cfg.sim.ic)) seed = rb->seed;
  const json m{{"manifest_version", 1},
               {"tool", "detctl"},
               {"version", DETCTL_VERSION},
               {"command", "simulate"},
               {"config", to_json(cfg)},
               {"seed", seed},
               {"started_at", started},
               {"finished_at", detail::utc_now()},
               {"conditions", out.summary["conditions"]},
               {"outputs", {{"csv", csv.string()}, {"summary", summary.string()}}}};
  detail::write_text(manifest, dump(m));

  *ctx.log << cfg.name << ": " << out.summary["status"].get<std::string>();
  if (out.summary.contains("verdicts")) {
    for (const auto& [k, ok] : out.summary["verdicts"].items()) *ctx.log << " " << k << "=" << (ok.get<bool>() ? "pass" : "FAIL");
  }
  *ctx.log << "\n  wrote " << csv.string() << ", " << summary.string() << ", " << manifest.string() << "\n";
  return out.pass ? kSuccess : kScientificFailure;
}

struct SweepOutcome {
  std::vector<SweepCell> cells;  // alpha-major, rank-minor
  std::vector<std::optional<int>> minimal_N;
};

inline SweepOutcome run_sweep(const SweepConfig& cfg, int jobs) {
  SweepOutcome out;
  const std::size_t nr = cfg.ranks.size();
  out.cells.resize(cfg.alphas.size() * nr);
  SweepSetup setup = cfg.setup;
  setup.jobs = 1;
  parallel_for(out.cells.size(), jobs, [&](std::size_t i) {
    const double alpha = cfg.alphas[i / nr];
    const int N = cfg.ranks[i % nr];
    out.cells[i] = run_sweep_cell(cfg.base, alpha, N, cfg.mu_rule(alpha), cfg.criterion, setup);
  });
  for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
    std::optional<int> best;
    for (std::size_t j = 0; j < nr && !best; ++j)
      if (out.cells[a * nr + j].stabilized) best = out.cells[a * nr + j].N;
    out.minimal_N.push_back(best);
  }
  return out;
}

inline int cmd_sweep(const std::string& arg, const Context& ctx) {
  SweepConfig cfg;
  try {
    const fs::path path = resolve_config(arg, ctx.preset_dir);
    cfg = parse_sweep_config(read_json_file(path), path.stem().string());
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  }
  const std::string started = detail::utc_now();
  const SweepOutcome res = run_sweep(cfg, ctx.jobs);

  std::string csv = "alpha,N,M,mu,terminal_ratio,stabilized,minimal_N,reference_N,failure\n";
  json rows = json::array();
  bool all_found = true;
  const std::size_t nr = cfg.ranks.size();
  for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
    const double alpha = cfg.alphas[a];
    const double ref = std::sqrt(alpha * cfg.grid.length() * cfg.grid.length() / cfg.base.nu) / std::numbers::pi;
    const std::string minimal = res.minimal_N[a] ? std::to_string(*res.minimal_N[a]) : "";
    all_found = all_found && res.minimal_N[a].has_value();
    json ratios = json::array();
    for (std::size_t j = 0; j < nr; ++j) {
      const SweepCell& c = res.cells[a * nr + j];
      detail::append_number(csv, c.alpha);
      csv += "," + std::to_string(c.N) + "," + std::to_string(c.M) + ",";
      detail::append_number(csv, c.mu);
      csv += ",";
      detail::append_number(csv, c.terminal_ratio);
      csv += c.stabilized ? ",1," : ",0,";
      csv += minimal + ",";
      detail::append_number(csv, ref);
      csv += ",";
      if (c.failure) csv += "\"" + *c.failure + "\"";
      csv += "\n";
      ratios.push_back(std::isfinite(c.terminal_ratio) ? json(c.terminal_ratio) : json(nullptr));
    }
    rows.push_back({{"alpha", alpha},
                    {"mu", cfg.mu_rule(alpha)},
                    {"minimal_N", res.minimal_N[a] ? json(*res.minimal_N[a]) : json(nullptr)},
                    {"reference_N", ref},
                    {"terminal_ratios", ratios}});
  }
  json scaling = json::array();
  for (std::size_t a = 1; a < cfg.alphas.size(); ++a) {
    const auto& lo = res.minimal_N[a - 1];
    const auto& hi = res.minimal_N[a];
    scaling.push_back({{"alpha_from", cfg.alphas[a - 1]},
                       {"alpha_to", cfg.alphas[a]},
                       {"N_ratio", lo && hi ? json(static_cast<double>(*hi) / *lo) : json(nullptr)}});
  }
  const json summary{{"name", cfg.name}, {"ranks", cfg.ranks}, {"rows", rows}, {"scaling", scaling},
                     {"pass", all_found}};
  const fs::path csv_path = ctx.out_dir / (cfg.name + ".csv");
  const fs::path summary_path = ctx.out_dir / (cfg.name + ".summary.json");
  const fs::path manifest_path = ctx.out_dir / (cfg.name + ".manifest.json");
  detail::write_text(csv_path, csv);
  detail::write_text(summary_path, dump(summary));
  detail::write_text(manifest_path, dump(json{{"manifest_version", 1},
                                              {"tool", "detctl"},
                                              {"version", DETCTL_VERSION},
                                              {"command", "sweep"},
                                              {"config", to_json(cfg)},
                                              {"seed", cfg.setup.ic.seed},
                                              {"jobs", ctx.jobs},
                                              {"started_at", started},
                                              {"finished_at", detail::utc_now()},
                                              {"outputs", {{"csv", csv_path.string()}, {"summary", summary_path.string()}}}}));
  for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
    *ctx.log << "alpha=" << cfg.alphas[a] << " minimal N=";
    if (res.minimal_N[a]) *ctx.log << *res.minimal_N[a];
    else *ctx.log << "none";
    *ctx.log << "\n";
  }
  *ctx.log << "  wrote " << csv_path.string() << ", " << summary_path.string() << "\n";
  return all_found ? kSuccess : kScientificFailure;
}

inline std::vector<NamedRun> energy_runs(const Context& ctx) {
  std::vector<NamedRun> runs;
  for (const char* name : {"thm51", "thm71"}) {
    const RunConfig cfg = load_run_config(name, ctx);
    runs.push_back({name, cfg.sim, cfg.params});
  }
  return runs;
}

inline bool is_suite(const std::string& s) {
  return s == "interpolation" || s == "energy" || s == "oracle" || s == "all";
}

inline int cmd_verify(const std::string& suite, std::uint64_t seed, const Context& ctx) {
  if (!is_suite(suite)) {
    std::cerr << "unknown suite '" << suite << "' (expected interpolation, energy, oracle or all)\n";
    return kUsageError;
  }
  std::vector<SuiteReport> reports;
  if (suite == "interpolation" || suite == "all") reports.push_back(run_interpolation_suite(seed));
  if (suite == "energy" || suite == "all") {
    std::vector<NamedRun> runs;
    try {
      runs = energy_runs(ctx);
    } catch (const ValidationError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kUsageError;
    }
    reports.push_back(run_energy_suite(runs));
  }
  if (suite == "oracle" || suite == "all") reports.push_back(run_oracle_suite(seed));

  bool pass = true;
  json out;
  if (reports.size() == 1) {
    out = to_json(reports.front());
  } else {
    json list = json::array();
    for (const SuiteReport& r : reports) list.push_back(to_json(r));
    out = {{"suite", suite}, {"seed", seed}, {"suites", list}};
  }
  for (const SuiteReport& r : reports) {
    pass = pass && r.pass();
    for (const PropertyResult& p : r.properties) {
      *ctx.log << (p.informational ? "info " : p.pass ? "pass " : "FAIL ") << r.suite << "/" << p.name
               << " worst_ratio=" << p.worst_ratio << " trials=" << p.trials << "\n";
    }
  }
  out["pass"] = pass;
  const fs::path path = ctx.out_dir / ("verify-" + suite + ".json");
  detail::write_text(path, dump(out));
  *ctx.log << "  wrote " << path.string() << "\n";
  return pass ? kSuccess : kScientificFailure;
}

}  // namespace detctl::cli
