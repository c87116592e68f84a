#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "detctl/analysis.hpp"
#include "detctl/dynamics.hpp"

namespace detctl::cli {

using nlohmann::json;

/// A config value failed validation. path() names the offending field,
/// e.g. "params.mu".
class ConfigError : public ValidationError {
 public:
  ConfigError(std::string path, const std::string& msg)
      : ValidationError(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace detail {

/// Reads keys from one JSON object and remembers which were consumed, so
/// leftovers can be reported as unknown.
class Section {
 public:
  /// Member `name` of `root`; absent is an error unless optional.
  static Section child(const json& root, const std::string& name, bool required = true) {
    Section s(nullptr, name);
    const auto it = root.find(name);
    if (it == root.end() || it->is_null()) {
      if (required) throw ConfigError(name, "missing section");
      return s;
    }
    if (!it->is_object()) throw ConfigError(name, "must be an object");
    s.obj_ = &*it;
    return s;
  }
  static Section of(const json& obj, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path, "must be an object");
    return Section(&obj, path);
  }

  bool present() const { return obj_ != nullptr; }
  bool has(const std::string& key) const { return obj_ && obj_->contains(key); }
  std::string path(const std::string& key) const { return path_ + "." + key; }

  const json* raw(const std::string& key) {
    if (!obj_) return nullptr;
    const auto it = obj_->find(key);
    if (it == obj_->end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = raw(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(path(key), "missing");
    }
    if (!v->is_number()) throw ConfigError(path(key), "must be a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(key), "must be finite");
    return d;
  }

  long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) {
    const json* v = raw(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(path(key), "missing");
    }
    if (!v->is_number_integer()) throw ConfigError(path(key), "must be an integer");
    return v->get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(path(key), "must be true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = raw(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(path(key), "missing");
    }
    if (!v->is_string()) throw ConfigError(path(key), "must be a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = raw(key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(path(key), "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_number() || !std::isfinite(e.get<double>()))
        throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "must be a finite number");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key) {
    const json* v = raw(key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(path(key), "must be an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_number_integer()) throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "must be an integer");
      out.push_back(e.get<int>());
    }
    return out;
  }

  /// Throws on any key that was never read.
  void finish() const {
    if (!obj_) return;
    for (const auto& [k, v] : obj_->items()) {
      if (!used_.contains(k)) throw ConfigError(path(k), "unknown key");
    }
  }

 private:
  Section(const json* obj, std::string path) : obj_(obj), path_(std::move(path)) {}

  const json* obj_ = nullptr;
  std::string path_;
  std::set<std::string> used_;
};

inline void check(bool ok, const std::string& path, const std::string& msg) {
  if (!ok) throw ConfigError(path, msg);
}

inline Boundary parse_boundary(const std::string& s, const std::string& path) {
  if (s == "neumann") return Boundary::Neumann;
  if (s == "periodic") return Boundary::Periodic;
  throw ConfigError(path, "must be \"neumann\" or \"periodic\"");
}

inline InterpolantKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "volume") return InterpolantKind::VolumeAverages;
  if (s == "nodal") return InterpolantKind::NodalIndicator;
  if (s == "fourier") return InterpolantKind::FourierProjection;
  if (s == "delta") return InterpolantKind::DeltaNodal;
  throw ConfigError(path, "must be one of volume, nodal, fourier, delta");
}

inline Scheme parse_scheme(const std::string& s, const std::string& path) {
  if (s == "etd1") return Scheme::Etd1;
  if (s == "etd-rk2") return Scheme::EtdRk2;
  throw ConfigError(path, "must be \"etd1\" or \"etd-rk2\"");
}

inline std::string scheme_name(Scheme s) { return s == Scheme::Etd1 ? "etd1" : "etd-rk2"; }

inline Grid1D parse_grid(const json& root) {
  Section g = Section::child(root, "grid");
  const double L = g.number("length");
  check(L > 0.0, g.path("length"), "must be > 0");
  const long long M = g.integer("resolution");
  check(M >= 8 && M <= (1 << 22), g.path("resolution"), "must be in [8, 4194304]");
  const Boundary bc = parse_boundary(g.string("boundary", "neumann"), g.path("boundary"));
  if (bc == Boundary::Periodic) check(M % 2 == 0, g.path("resolution"), "must be even on a periodic grid");
  g.finish();
  return Grid1D(L, static_cast<int>(M), bc);
}

/// Control section; `rank_required` is false for sweeps, where the rank is swept.
inline std::optional<InterpolantSpec> parse_control(const json& root, double L, bool rank_required) {
  Section c = Section::child(root, "control", false);
  if (!c.present()) return std::nullopt;
  InterpolantSpec spec;
  spec.length = L;
  spec.kind = parse_kind(c.string("kind"), c.path("kind"));
  if (rank_required) {
    const long long N = c.integer("rank");
    check(N >= 1, c.path("rank"), "must be >= 1");
    spec.rank = static_cast<int>(N);
  } else {
    check(!c.has("rank"), c.path("rank"), "not allowed in a sweep (use experiment.ranks)");
  }
  spec.include_mean = c.boolean("include_mean", true);
  if (c.has("include_mean"))
    check(spec.kind == InterpolantKind::FourierProjection, c.path("include_mean"), "only applies to kind fourier");
  spec.obs_points = c.numbers("obs_points");
  spec.act_points = c.numbers("act_points");
  if (!spec.obs_points.empty())
    check(spec.kind == InterpolantKind::NodalIndicator || spec.kind == InterpolantKind::DeltaNodal,
          c.path("obs_points"), "only applies to kinds nodal and delta");
  if (!spec.act_points.empty())
    check(spec.kind == InterpolantKind::DeltaNodal, c.path("act_points"), "only applies to kind delta");
  c.finish();
  if (rank_required) {
    try {
      validate(spec);
    } catch (const ValidationError& e) {
      throw ConfigError("control", e.what());
    }
  }
  return spec;
}

inline InitialCondition parse_ic(Section& sim) {
  const json* raw = sim.raw("ic");
  if (!raw) throw ConfigError(sim.path("ic"), "missing");
  Section ic = Section::of(*raw, sim.path("ic"));
  const std::string type = ic.string("type");
  InitialCondition out;
  if (type == "single-mode") {
    const long long k = ic.integer("k");
    check(k >= 0, ic.path("k"), "must be >= 0");
    out = SingleMode{static_cast<int>(k), ic.number("amplitude")};
  } else if (type == "random-band") {
    const long long seed = ic.integer("seed");
    check(seed >= 0, ic.path("seed"), "must be >= 0");
    const long long kmax = ic.integer("kmax");
    check(kmax >= 0, ic.path("kmax"), "must be >= 0");
    const double amp = ic.number("amplitude");
    check(amp >= 0.0, ic.path("amplitude"), "must be >= 0");
    out = RandomBand{static_cast<std::uint64_t>(seed), static_cast<int>(kmax), amp};
  } else if (type == "constant") {
    out = ConstantState{ic.number("value")};
  } else {
    throw ConfigError(ic.path("type"), "must be one of single-mode, random-band, constant");
  }
  ic.finish();
  return out;
}

inline json ic_to_json(const InitialCondition& ic) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SingleMode>)
          return {{"type", "single-mode"}, {"k", c.k}, {"amplitude", c.amplitude}};
        else if constexpr (std::is_same_v<T, RandomBand>)
          return {{"type", "random-band"}, {"seed", c.seed}, {"kmax", c.kmax}, {"amplitude", c.amplitude}};
        else
          return {{"type", "constant"}, {"value", c.value}};
      },
      ic);
}

inline std::string kind_name(InterpolantKind k) {
  switch (k) {
    case InterpolantKind::VolumeAverages: return "volume";
    case InterpolantKind::NodalIndicator: return "nodal";
    case InterpolantKind::FourierProjection: return "fourier";
    case InterpolantKind::DeltaNodal: return "delta";
  }
  return "?";
}

inline json grid_to_json(const Grid1D& g) {
  return {{"length", g.length()},
          {"resolution", g.size()},
          {"boundary", g.boundary() == Boundary::Neumann ? "neumann" : "periodic"}};
}

inline json control_to_json(const std::optional<InterpolantSpec>& spec, bool with_rank) {
  if (!spec) return nullptr;
  json c{{"kind", kind_name(spec->kind)}};
  if (with_rank) c["rank"] = spec->rank;
  if (spec->kind == InterpolantKind::FourierProjection) c["include_mean"] = spec->include_mean;
  if (!spec->obs_points.empty()) c["obs_points"] = spec->obs_points;
  if (!spec->act_points.empty()) c["act_points"] = spec->act_points;
  return c;
}

}  // namespace detail

/// One closed-loop simulation. output_every thins the CSV only; the in-memory
/// trajectory (and everything computed from it) uses record_every.
struct RunConfig {
  std::string name;
  ClosedLoopParams params;
  SimConfig sim;
  int output_every = 1;
  double slack = 0.05;
  std::optional<double> fit_t0;
};

struct GainRuleSpec {
  std::string type = "proportional";  // mu = factor * alpha, or "constant": mu = value
  double value = 5.0;

  double operator()(double alpha) const { return type == "proportional" ? value * alpha : value; }
};

struct SweepConfig {
  std::string name;
  ClosedLoopParams base;  // alpha and mu are filled per cell
  Grid1D grid{1.0, 128, Boundary::Neumann};
  std::vector<double> alphas;
  std::vector<int> ranks;
  GainRuleSpec mu_rule;
  StabilizationCriterion criterion;
  SweepSetup setup;
};

inline RunConfig parse_run_config(const json& root, const std::string& default_name = "run") {
  detail::check(root.is_object(), "config", "must be a JSON object");
  for (const auto& [k, v] : root.items()) {
    if (k != "grid" && k != "params" && k != "control" && k != "sim" && k != "experiment")
      throw ConfigError(k, "unknown section");
  }
  RunConfig cfg;
  const Grid1D grid = detail::parse_grid(root);

  auto ps = detail::Section::child(root, "params");
  cfg.params.nu = ps.number("nu");
  detail::check(cfg.params.nu > 0.0, ps.path("nu"), "must be > 0");
  cfg.params.alpha = ps.number("alpha");
  detail::check(cfg.params.alpha > 0.0, ps.path("alpha"), "must be > 0");
  cfg.params.mu = ps.number("mu", 0.0);
  detail::check(cfg.params.mu >= 0.0, ps.path("mu"), "must be >= 0");
  cfg.params.length = grid.length();
  ps.finish();
  cfg.params.control = detail::parse_control(root, grid.length(), true);
  if (cfg.params.mu > 0.0) detail::check(cfg.params.control.has_value(), "control", "missing while params.mu > 0");
  if (cfg.params.control) {
    try {
      check_compatible(*cfg.params.control, grid);
    } catch (const ValidationError& e) {
      throw ConfigError("control", e.what());
    }
    const bool delta = cfg.params.control->kind == InterpolantKind::DeltaNodal;
    detail::check(delta == (grid.boundary() == Boundary::Periodic), "grid.boundary",
                  delta ? "kind delta needs a periodic grid" : "this control kind needs a neumann grid");
  }

  auto s = detail::Section::child(root, "sim");
  cfg.sim.grid = grid;
  cfg.sim.dt = s.number("dt");
  detail::check(cfg.sim.dt > 0.0, s.path("dt"), "must be > 0");
  cfg.sim.T = s.number("T");
  detail::check(cfg.sim.T > cfg.sim.dt, s.path("T"), "must exceed dt");
  const double steps = cfg.sim.T / cfg.sim.dt;
  detail::check(std::abs(steps - std::round(steps)) <= 1e-9 * steps, s.path("T"), "must be an integer multiple of dt");
  const long long re = s.integer("record_every", 1);
  detail::check(re >= 1, s.path("record_every"), "must be >= 1");
  cfg.sim.record_every = static_cast<int>(re);
  const long long oe = s.integer("output_every", 1);
  detail::check(oe >= 1, s.path("output_every"), "must be >= 1");
  cfg.output_every = static_cast<int>(oe);
  cfg.sim.scheme = detail::parse_scheme(s.string("scheme", "etd1"), s.path("scheme"));
  cfg.sim.ic = detail::parse_ic(s);
  s.finish();

  auto e = detail::Section::child(root, "experiment", false);
  cfg.name = e.string("name", default_name);
  detail::check(!cfg.name.empty() && cfg.name.find('/') == std::string::npos, e.path("name"),
                "must be a nonempty file stem");
  cfg.slack = e.number("slack", 0.05);
  detail::check(cfg.slack >= 0.0, e.path("slack"), "must be >= 0");
  if (e.has("fit_t0")) {
    cfg.fit_t0 = e.number("fit_t0");
    detail::check(*cfg.fit_t0 >= 0.0, e.path("fit_t0"), "must be >= 0");
  }
  e.finish();
  return cfg;
}

inline SweepConfig parse_sweep_config(const json& root, const std::string& default_name = "sweep") {
  detail::check(root.is_object(), "config", "must be a JSON object");
  for (const auto& [k, v] : root.items()) {
    if (k != "grid" && k != "params" && k != "control" && k != "sim" && k != "experiment")
      throw ConfigError(k, "unknown section");
  }
  SweepConfig cfg;
  cfg.grid = detail::parse_grid(root);

  auto ps = detail::Section::child(root, "params");
  cfg.base.nu = ps.number("nu");
  detail::check(cfg.base.nu > 0.0, ps.path("nu"), "must be > 0");
  detail::check(!ps.has("alpha"), ps.path("alpha"), "not allowed in a sweep (use experiment.alphas)");
  detail::check(!ps.has("mu"), ps.path("mu"), "not allowed in a sweep (use experiment.mu_rule)");
  cfg.base.length = cfg.grid.length();
  ps.finish();
  cfg.base.control = detail::parse_control(root, cfg.grid.length(), false);
  detail::check(cfg.base.control.has_value(), "control", "missing (a sweep needs a control kind)");
  const bool delta = cfg.base.control->kind == InterpolantKind::DeltaNodal;
  detail::check(delta == (cfg.grid.boundary() == Boundary::Periodic), "grid.boundary",
                delta ? "kind delta needs a periodic grid" : "this control kind needs a neumann grid");

  auto s = detail::Section::child(root, "sim");
  cfg.setup.base_resolution = cfg.grid.size();
  cfg.setup.dt = s.number("dt");
  detail::check(cfg.setup.dt > 0.0, s.path("dt"), "must be > 0");
  cfg.setup.scheme = detail::parse_scheme(s.string("scheme", "etd1"), s.path("scheme"));
  const InitialCondition ic = detail::parse_ic(s);
  const auto* rb = std::get_if<RandomBand>(&ic);
  detail::check(rb != nullptr, s.path("ic.type"), "a sweep needs a random-band initial condition");
  cfg.setup.ic = *rb;
  s.finish();

  auto e = detail::Section::child(root, "experiment");
  cfg.name = e.string("name", default_name);
  detail::check(!cfg.name.empty() && cfg.name.find('/') == std::string::npos, e.path("name"),
                "must be a nonempty file stem");
  cfg.alphas = e.numbers("alphas");
  detail::check(!cfg.alphas.empty(), e.path("alphas"), "must list at least one alpha");
  for (std::size_t i = 0; i < cfg.alphas.size(); ++i)
    detail::check(cfg.alphas[i] > 0.0, e.path("alphas") + "[" + std::to_string(i) + "]", "must be > 0");
  cfg.ranks = e.integers("ranks");
  detail::check(!cfg.ranks.empty(), e.path("ranks"), "must list at least one rank");
  for (std::size_t i = 0; i < cfg.ranks.size(); ++i) {
    detail::check(cfg.ranks[i] >= 1, e.path("ranks") + "[" + std::to_string(i) + "]", "must be >= 1");
    if (i > 0)
      detail::check(cfg.ranks[i] > cfg.ranks[i - 1], e.path("ranks"), "must be strictly increasing");
    detail::check(cfg.ranks[i] <= resolution_for_rank(cfg.grid.size(), cfg.ranks[i]) / 4,
                  e.path("ranks") + "[" + std::to_string(i) + "]", "exceeds M/4");
  }
  if (const json* raw = e.raw("mu_rule")) {
    auto mr = detail::Section::of(*raw, e.path("mu_rule"));
    cfg.mu_rule.type = mr.string("type");
    detail::check(cfg.mu_rule.type == "proportional" || cfg.mu_rule.type == "constant", mr.path("type"),
                  "must be \"proportional\" or \"constant\"");
    cfg.mu_rule.value = mr.number(cfg.mu_rule.type == "proportional" ? "factor" : "value");
    detail::check(cfg.mu_rule.value >= 0.0, mr.path(cfg.mu_rule.type == "proportional" ? "factor" : "value"),
                  "must be >= 0");
    mr.finish();
  } else {
    throw ConfigError(e.path("mu_rule"), "missing");
  }
  cfg.criterion.ratio = e.number("terminal_ratio", 1e-4);
  detail::check(cfg.criterion.ratio > 0.0, e.path("terminal_ratio"), "must be > 0");
  cfg.criterion.horizon_factor = e.number("horizon_factor", 20.0);
  detail::check(cfg.criterion.horizon_factor > 0.0, e.path("horizon_factor"), "must be > 0");
  e.finish();
  return cfg;
}

/// Normalized echo of a parsed config; parsing it again yields the same run.
inline json to_json(const RunConfig& cfg) {
  json sim{{"dt", cfg.sim.dt},
           {"T", cfg.sim.T},
           {"record_every", cfg.sim.record_every},
           {"output_every", cfg.output_every},
           {"scheme", detail::scheme_name(cfg.sim.scheme)},
           {"ic", detail::ic_to_json(cfg.sim.ic)}};
  json exp{{"name", cfg.name}, {"slack", cfg.slack}};
  if (cfg.fit_t0) exp["fit_t0"] = *cfg.fit_t0;
  json out{{"grid", detail::grid_to_json(cfg.sim.grid)},
           {"params", {{"nu", cfg.params.nu}, {"alpha", cfg.params.alpha}, {"mu", cfg.params.mu}}},
           {"sim", sim},
           {"experiment", exp}};
  if (cfg.params.control) out["control"] = detail::control_to_json(cfg.params.control, true);
  return out;
}

inline json to_json(const SweepConfig& cfg) {
  json mr{{"type", cfg.mu_rule.type}};
  mr[cfg.mu_rule.type == "proportional" ? "factor" : "value"] = cfg.mu_rule.value;
  return {{"grid", detail::grid_to_json(cfg.grid)},
          {"params", {{"nu", cfg.base.nu}}},
          {"control", detail::control_to_json(cfg.base.control, false)},
          {"sim",
           {{"dt", cfg.setup.dt},
            {"scheme", detail::scheme_name(cfg.setup.scheme)},
            {"ic", detail::ic_to_json(cfg.setup.ic)}}},
          {"experiment",
           {{"name", cfg.name},
            {"alphas", cfg.alphas},
            {"ranks", cfg.ranks},
            {"mu_rule", mr},
            {"terminal_ratio", cfg.criterion.ratio},
            {"horizon_factor", cfg.criterion.horizon_factor}}}};
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

/// `arg` as a path if it exists, else as the name of a shipped preset.
inline std::filesystem::path resolve_config(const std::string& arg, const std::filesystem::path& preset_dir) {
  namespace fs = std::filesystem;
  if (fs::exists(arg)) return arg;
  const fs::path preset = preset_dir / (arg + ".json");
  if (arg.find('/') == std::string::npos && fs::exists(preset)) return preset;
  throw ConfigError(arg, "no such file or preset");
}

}  // namespace detctl::cli
