#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "detctl/cli/commands.hpp"

using namespace detctl;
using namespace detctl::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path preset_dir = DETCTL_PRESET_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("detctl-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_run() {
  return json::parse(R"({
    "grid": {"length": 1.0, "resolution": 32, "boundary": "neumann"},
    "params": {"nu": 1.0, "alpha": 4.0, "mu": 10.0},
    "control": {"kind": "fourier", "rank": 2, "include_mean": true},
    "sim": {"dt": 1e-4, "T": 0.05, "record_every": 1, "output_every": 7, "scheme": "etd-rk2",
            "ic": {"type": "random-band", "seed": 3, "kmax": 4, "amplitude": 1.0}},
    "experiment": {"name": "small", "slack": 0.05}
  })");
}

std::string error_of(const json& j) {
  try {
    parse_run_config(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

Context quiet(const fs::path& out, std::ostream& log) {
  Context ctx;
  ctx.out_dir = out;
  ctx.preset_dir = preset_dir;
  ctx.log = &log;
  return ctx;
}

}  // namespace

TEST_CASE("presets parse") {
  for (const char* name : {"thm51", "thm71", "thm21"}) {
    const RunConfig cfg = parse_run_config(read_json_file(preset_dir / (std::string(name) + ".json")));
    CHECK(cfg.name == name);
    CHECK(cfg.params.control.has_value());
  }
  const SweepConfig sw = parse_sweep_config(read_json_file(preset_dir / "sweep-scaling.json"));
  CHECK(sw.alphas == std::vector<double>{4.0, 16.0, 64.0});
  CHECK(sw.ranks.size() == 8);
  CHECK(sw.mu_rule(16.0) == 80.0);
  CHECK(sw.criterion.ratio == 1e-4);
}

TEST_CASE("config errors name the offending field") {
  json j = small_run();
  j["params"]["mu"] = -1.0;
  CHECK(error_of(j) == "params.mu");

  j = small_run();
  j["sim"]["dtt"] = 1.0;
  CHECK(error_of(j) == "sim.dtt");

  j = small_run();
  j["grid"]["resolution"] = 6;
  CHECK_FALSE(error_of(j).empty());

  j = small_run();
  j["control"]["kind"] = "spline";
  CHECK(error_of(j) == "control.kind");

  j = small_run();
  j["sim"]["ic"]["type"] = "gaussian";
  CHECK(error_of(j) == "sim.ic.type");

  j = small_run();
  j.erase("sim");
  CHECK(error_of(j) == "sim");

  j = small_run();
  j["extra"] = json::object();
  CHECK_FALSE(error_of(j).empty());

  json s = read_json_file(preset_dir / "sweep-scaling.json");
  s["experiment"]["alphas"] = json::array();
  CHECK_THROWS_AS(parse_sweep_config(s), ValidationError);
  s = read_json_file(preset_dir / "sweep-scaling.json");
  s["params"]["alpha"] = 3.0;
  CHECK_THROWS_AS(parse_sweep_config(s), ValidationError);
}

TEST_CASE("config echo round trips") {
  const RunConfig a = parse_run_config(small_run());
  const json echo = to_json(a);
  const RunConfig b = parse_run_config(echo);
  CHECK(to_json(b) == echo);
  CHECK(b.sim.dt == a.sim.dt);
  CHECK(b.output_every == 7);

  const SweepConfig s = parse_sweep_config(read_json_file(preset_dir / "sweep-scaling.json"));
  CHECK(to_json(parse_sweep_config(to_json(s))) == to_json(s));
}

TEST_CASE("trajectory csv layout and stride") {
  TrajectoryRecord r;
  for (int i = 0; i < 10; ++i) {
    r.times.push_back(0.1 * i);
    for (auto* v : {&r.l2, &r.h1x, &r.h1, &r.l4p4, &r.gamma2, &r.ih_l2, &r.energy_residual}) v->push_back(i);
  }
  const std::string csv = trajectory_csv(r, 4);
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 1 + 4);  // rows 0, 4, 8 and the last one
  CHECK(lines[0] == "t,l2,h1x,h1,l4p4,gamma2,ih_l2,energy_residual");
  CHECK(lines[2].starts_with("0.40000000000000002,4,"));
  CHECK(lines[4].starts_with("0.90000000000000002,9,"));
  CHECK(std::count(lines[1].begin(), lines[1].end(), ',') == 7);
}

TEST_CASE("zero initial data gives vacuous verdicts") {
  json j = small_run();
  j["sim"]["ic"] = {{"type", "constant"}, {"value", 0.0}};
  const RunOutcome out = evaluate_run(parse_run_config(j));
  CHECK(out.pass);
  CHECK(out.summary["status"] == "completed");
  CHECK(out.summary["fit"].is_null());
  CHECK(out.summary["verdicts"]["decay_bound_thm51"] == true);
  for (double v : out.trajectory->l2) CHECK(v == 0.0);
}

TEST_CASE("simulate writes deterministic outputs and replays from its manifest") {
  TempDir a, b, c;
  std::ostringstream log;
  const fs::path cfg = a.path / "small.json";
  cli::detail::write_text(cfg, small_run().dump());

  CHECK(cmd_simulate(cfg.string(), quiet(a.path, log)) == kSuccess);
  CHECK(cmd_simulate(cfg.string(), quiet(b.path, log)) == kSuccess);
  for (const char* f : {"small.csv", "small.summary.json"}) CHECK(slurp(a.path / f) == slurp(b.path / f));

  const json manifest = read_json_file(a.path / "small.manifest.json");
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["version"] == DETCTL_VERSION);
  CHECK(cmd_simulate((a.path / "small.manifest.json").string(), quiet(c.path, log)) == kSuccess);
  CHECK(slurp(c.path / "small.summary.json") == slurp(a.path / "small.summary.json"));

  // 501 records at stride 7: rows 0, 7, ..., 497, then the final one.
  const std::string csv = slurp(a.path / "small.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 72 + 1);
}

TEST_CASE("usage errors exit with code two") {
  TempDir d;
  std::ostringstream log;
  const Context ctx = quiet(d.path, log);
  CHECK(cmd_verify("bogus", 1, ctx) == kUsageError);
  CHECK(cmd_simulate("no-such-preset", ctx) == kUsageError);
  json j = small_run();
  j["params"]["mu"] = -1.0;
  cli::detail::write_text(d.path / "bad.json", j.dump());
  CHECK(cmd_simulate((d.path / "bad.json").string(), ctx) == kUsageError);
  CHECK_FALSE(fs::exists(d.path / "bad.csv"));
}

TEST_CASE("a one-cell sweep matches the equivalent run") {
  json s = read_json_file(preset_dir / "sweep-scaling.json");
  s["grid"]["resolution"] = 32;
  s["sim"]["dt"] = 1e-3;
  s["sim"]["ic"]["kmax"] = 4;
  s["experiment"]["alphas"] = {16.0};
  s["experiment"]["ranks"] = {2};
  const SweepConfig sw = parse_sweep_config(s);
  const SweepOutcome res = run_sweep(sw, 1);
  REQUIRE(res.cells.size() == 1);

  json r = small_run();
  r["params"]["alpha"] = 16.0;
  r["params"]["mu"] = 80.0;
  r["control"] = {{"kind", "volume"}, {"rank", 2}};
  r["sim"] = {{"dt", 1e-3},
              {"T", 20.0 / 16.0},
              {"scheme", "etd1"},
              {"ic", {{"type", "random-band"}, {"seed", 7}, {"kmax", 4}, {"amplitude", 1.0}}}};
  const RunOutcome run = evaluate_run(parse_run_config(r));
  const auto& traj = *run.trajectory;
  CHECK(res.cells[0].M == 32);
  CHECK(res.cells[0].terminal_ratio == traj.l2.back() / traj.l2.front());
  CHECK(res.minimal_N[0].has_value() == res.cells[0].stabilized);
}
