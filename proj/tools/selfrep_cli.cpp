// selfrep: command-line driver for the elastic + self-repulsion solver.

#include "selfrep/config.hpp"
#include "selfrep/report.hpp"
#include "selfrep/scenario.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace selfrep;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config;
  std::string scenario = "identity";
  std::string out = "out";
  std::string tag;
  std::string variant;
  int resolution = 0;
  int workers = 1;
  std::optional<std::uint64_t> seed;
};

struct ConfigFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Config load_or_default(const Options& o) {
  Config cfg;
  if (!o.config.empty()) {
    try {
      cfg = load_config(o.config);
    } catch (const ConfigError& e) {
      throw ConfigFailure(e.what());
    }
  }
  if (o.resolution > 0) {
    if (o.resolution < 64) throw ConfigFailure("--resolution must be >= 64");
    cfg.experiment.resolution = o.resolution;
  }
  if (o.seed) cfg.optimizer.seed = *o.seed;
  if (o.workers < 1) throw ConfigFailure("--workers must be >= 1");
  return cfg;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

fs::path run_dir(const Options& o, const std::string& scenario, const Config& cfg) {
  std::string safe = scenario;
  for (char& c : safe)
    if (c == ':' || c == '/' || c == '\\') c = '_';
  const fs::path dir = fs::path(o.out) / safe / (o.tag.empty() ? timestamp() : o.tag);
  fs::create_directories(dir);
  std::ofstream(dir / "config-echo.json") << config_to_json(cfg);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

Scenario scenario_for(const Options& o, Config& cfg) {
  Scenario sc = make_scenario(o.scenario, cfg.experiment.n);
  if (!cfg.model.box && sc.box) cfg.model.box = sc.box;
  return sc;
}

bool is_builtin(const std::string& name) {
  const std::string head = name.substr(0, name.find(':'));
  for (const auto& b : builtin_scenarios())
    if (b.substr(0, b.find(':')) == head) return true;
  return false;
}

int cmd_validate(const Options& o) {
  const Config cfg = load_or_default(o);
  const ValidationReport rep = validate(cfg.model);
  std::cout << validation_text(cfg.model, rep);
  return rep.valid() ? 0 : kExitConfig;
}

int cmd_evaluate(const Options& o) {
  Config cfg = load_or_default(o);
  const Scenario sc = scenario_for(o, cfg);
  const fs::path dir = run_dir(o, sc.name, cfg);
  const DeformationField field(*sc.mesh, sc.initial);
  const EnergyContext ctx(*sc.mesh, cfg.model, cfg.quadrature, o.workers);
  const EnergyBreakdown e = evaluate_energy(ctx, field, false);
  const CncReport cnc = cnc_defect(*sc.mesh, field, cfg.experiment.resolution, o.workers);

  std::string energy = energy_json(e, cfg.model.epsilon);
  if (is_builtin(sc.name)) {
    // Same map at twice the resolution: a diverging nonlocal term signals
    // that the deformation is not injective.
    const Scenario fine = make_scenario(sc.name, 2 * cfg.experiment.n);
    const DeformationField ff(*fine.mesh, fine.initial);
    const RepulsionResult coarse_rep = repulsion_dispatch(cfg.model, *sc.mesh, field, cfg.quadrature, false, o.workers);
    const RepulsionResult fine_rep = repulsion_dispatch(cfg.model, *fine.mesh, ff, cfg.quadrature, false, o.workers);
    const double ratio = fine_rep.value / coarse_rep.value;
    energy.resize(energy.size() - 3);  // drop the closing "\n}\n"
    energy += fmt::format(",\n  \"refinement\": {{\"n\": [{}, {}], \"nonlocal\": [{:.17g}, {:.17g}], \"ratio\": {:.17g}}}\n}}\n",
                          cfg.experiment.n, 2 * cfg.experiment.n, coarse_rep.value, fine_rep.value, ratio);
  }
  write_text(dir / "energy.json", energy);
  write_text(dir / "cnc.json", cnc_json(cnc));
  write_pgm(dir / "multiplicity.pgm", cnc.grid);

  fmt::print("scenario {}: {}\n", sc.name, sc.description);
  fmt::print("status {}  grad_term {:.12g}  det_term {:.12g}  nonlocal {:.12g}  total {:.12g}\n",
             to_string(e.status), e.grad_term, e.det_term, e.nonlocal_term, e.total);
  if (e.status == EvalStatus::inadmissible) fmt::print("inadmissible field: det F <= 0 on triangle {}\n", e.witness[0]);
  fmt::print("cnc: det_integral {:.12g}  image_area {:.12g}  defect {:.6g}  (tolerance {:.3g})  boundary {}\n",
             cnc.det_integral, cnc.image_area, cnc.defect, cnc.raster_tolerance,
             cnc.boundary_injective ? "injective" : "self-intersecting");
  fmt::print("wrote {}\n", dir.string());
  return 0;
}

void save_field(const fs::path& path, const Mesh& mesh, const DeformationField& field) {
  save_mesh(path, mesh, &field.positions());
}

int cmd_minimize(const Options& o) {
  Config cfg = load_or_default(o);
  const Scenario sc = scenario_for(o, cfg);
  const fs::path dir = run_dir(o, sc.name, cfg);
  const EnergyContext ctx(*sc.mesh, cfg.model, cfg.quadrature, o.workers);
  const MinimizeResult res = minimize(ctx, DeformationField(*sc.mesh, sc.initial), cfg.optimizer);
  std::ofstream trace(dir / "trace.csv");
  write_trace_csv(trace, res.trace);
  write_text(dir / "energy.json", energy_json(res.energy, cfg.model.epsilon));
  save_field(dir / "field.json", *sc.mesh, res.field);
  const auto& last = res.trace.records.back();
  fmt::print("{} after {} iterations: total {:.12g}  grad max-norm {:.3g}  min det {:.6g}\n",
             to_string(res.trace.reason), last.iter, last.total, last.grad_norm, last.min_det);
  fmt::print("wrote {}\n", dir.string());
  return res.trace.reason == Termination::line_search_failure ? kExitRuntime : 0;
}

int cmd_sweep(const Options& o) {
  Config cfg = load_or_default(o);
  const Scenario sc = scenario_for(o, cfg);
  const fs::path dir = run_dir(o, sc.name, cfg);
  const SweepResult res = gamma_sweep(*sc.mesh, DeformationField(*sc.mesh, sc.initial), cfg.experiment.schedule,
                                      cfg.model, cfg.quadrature, cfg.optimizer, cfg.experiment.resolution, o.workers);
  std::ofstream csv(dir / "sweep.csv");
  write_sweep_csv(csv, res);
  bool failed = false;
  fmt::print("{:>12} {:>14} {:>14} {:>12} {:>12}  {}\n", "epsilon", "eps*D", "elastic", "defect", "tolerance",
             "termination");
  for (const auto& r : res.records) {
    fmt::print("{:>12.4g} {:>14.6g} {:>14.8g} {:>12.4g} {:>12.4g}  {}\n", r.epsilon, r.eps_times_nonlocal,
               r.energy.elastic(), r.cnc.defect, r.cnc.raster_tolerance, to_string(r.reason));
    failed = failed || r.reason == Termination::line_search_failure;
  }
  if (!res.records.empty()) save_field(dir / "field.json", *sc.mesh, res.records.back().field);
  fmt::print("wrote {}\n", dir.string());
  return failed ? kExitRuntime : 0;
}

int cmd_cnc(const Options& o) {
  Config cfg = load_or_default(o);
  const Scenario sc = scenario_for(o, cfg);
  const fs::path dir = run_dir(o, sc.name, cfg);
  const CncReport cnc = cnc_defect(*sc.mesh, DeformationField(*sc.mesh, sc.initial), cfg.experiment.resolution,
                                   o.workers);
  write_text(dir / "cnc.json", cnc_json(cnc));
  write_pgm(dir / "multiplicity.pgm", cnc.grid);
  fmt::print("det_integral {:.12g}  image_area {:.12g}  defect {:.6g}  tolerance {:.3g}\n", cnc.det_integral,
             cnc.image_area, cnc.defect, cnc.raster_tolerance);
  fmt::print("boundary {}  overlapping triangle pairs {}  max multiplicity {}\n",
             cnc.boundary_injective ? "injective" : "self-intersecting", cnc.overlap_pairs.size(), cnc.max_multiplicity);
  fmt::print("wrote {}\n", dir.string());
  return 0;
}

int cmd_bench(const Options& o) {
  Config cfg = load_or_default(o);
  Variant variant = cfg.model.variant;
  if (!o.variant.empty()) {
    try {
      variant = parse_variant(o.variant);
    } catch (const std::exception& e) {
      throw ConfigFailure(e.what());
    }
  }
  const fs::path dir = run_dir(o, std::string("bench-") + to_string(variant), cfg);
  const CostProfile prof = cost_profile(cfg.experiment.bench_sizes, variant, cfg.model, cfg.quadrature,
                                        cfg.experiment.delta_cells, o.workers, cfg.experiment.bench_samples);
  std::ofstream csv(dir / "cost.csv");
  write_cost_csv(csv, prof);
  for (const auto& r : prof.rows)
    fmt::print("n={:<4} h={:<10.4g} pairs={:<10} median {:.6g} s\n", r.n, r.h, r.pairs, r.median_seconds);
  fmt::print("fitted slope {:.4f}  pair-count slope {:.4f}\n", prof.fitted_slope, prof.pair_count_slope);
  fmt::print("wrote {}\n", dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-element solver for elastic energies with vanishing self-repulsion"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool scenario) {
    sub->add_option("--config", o.config, "Config file (JSON)")->check(CLI::ExistingFile);
    if (scenario) sub->add_option("--scenario", o.scenario, "Builtin scenario name or scenario file");
    sub->add_option("--out", o.out, "Output root directory");
    sub->add_option("--tag", o.tag, "Run directory name (default: UTC timestamp)");
    sub->add_option("--resolution", o.resolution, "Raster cells per axis for the CNC meter");
    sub->add_option("--workers", o.workers, "Worker threads; results do not depend on it");
    sub->add_option("--seed", o.seed, "Seed recorded with the run");
  };

  auto* validate_cmd = app.add_subcommand("validate-params", "Check the parameter regime of a config");
  validate_cmd->add_option("--config", o.config, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Energy breakdown and CNC diagnostics of a scenario");
  common(evaluate_cmd, true);
  auto* minimize_cmd = app.add_subcommand("minimize", "Minimize E_eps from a scenario's initial field");
  common(minimize_cmd, true);
  auto* sweep_cmd = app.add_subcommand("gamma-sweep", "Warm-started minimization over a decreasing eps schedule");
  common(sweep_cmd, true);
  auto* cnc_cmd = app.add_subcommand("cnc-check", "Ciarlet-Necas diagnostics of a scenario's initial field");
  common(cnc_cmd, true);
  auto* bench_cmd = app.add_subcommand("bench-scaling", "Time the nonlocal term over mesh sizes");
  common(bench_cmd, false);
  bench_cmd->add_option("--variant", o.variant, "bulk, boundary-layer or surface (default: config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*validate_cmd) return cmd_validate(o);
    if (*evaluate_cmd) return cmd_evaluate(o);
    if (*minimize_cmd) return cmd_minimize(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*cnc_cmd) return cmd_cnc(o);
    if (*bench_cmd) return cmd_bench(o);
  } catch (const ConfigFailure& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
