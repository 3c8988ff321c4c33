// haldane-kinetic: command line front end.
//
//   run              single run: diagnostics.csv, summary.json, checkpoint_final.bin
//   converge         resolution study over study.j_levels -> convergence.json
//   stability        perturbed-data study over study.epsilons -> stability.json
//   sweep            one run per study.alphas -> alpha_<a>/..., sweep.json
//   validate-kernel  kernel certificate -> kernel_certificate.json
//   equilibrium      equilibrium on the velocity lattice -> equilibrium.csv
//
// Exit status: 0 success, 1 other failure, 2 config error, 3 invariant breach.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "haldane/config.hpp"
#include "haldane/kernel.hpp"
#include "haldane/runner.hpp"

using namespace haldane;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<int> cadence;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "YAML run configuration")->required();
  sub->add_option("--out", f.out, "output directory (overrides output.directory)");
  sub->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", f.seed, "seed for perturbation scenarios");
  sub->add_option("--cadence", f.cadence, "diagnostics every N steps")->check(CLI::PositiveNumber);
}

RunConfig load(const Flags& f) {
  RunConfig cfg = load_config(f.config);
  if (!f.out.empty()) cfg.output.directory = f.out;
  if (f.workers) cfg.workers = *f.workers;
  if (f.seed) cfg.seed = *f.seed;
  if (f.cadence) cfg.output.cadence = *f.cadence;
  cfg.validate();
  return cfg;
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

void write_json(const std::filesystem::path& dir, const std::string& name, const nlohmann::json& j) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / name);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
}

int cmd_run(const Flags& flags) {
  const RunConfig cfg = load(flags);
  const auto out = run_single(cfg, cfg.output.directory, log_line);
  std::cout << out.summary.dump(2) << '\n';
  return 0;
}

int cmd_converge(const Flags& flags) {
  const RunConfig cfg = load(flags);
  const auto rep = run_convergence_study(cfg, cfg.study.j_levels, log_line);
  const auto j = rep.to_json();
  write_json(cfg.output.directory, "convergence.json", j);
  std::cout << j.dump(2) << '\n';
  if (!rep.decreasing) std::cout << "convergence study FAILED: distances do not decrease\n";
  return 0;
}

int cmd_stability(const Flags& flags) {
  const RunConfig cfg = load(flags);
  const auto rep = run_stability_study(cfg, cfg.study.epsilons, log_line);
  const auto j = rep.to_json();
  write_json(cfg.output.directory, "stability.json", j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const Flags& flags) {
  const RunConfig cfg = load(flags);
  const auto j = run_alpha_sweep(cfg, cfg.study.alphas, cfg.output.directory, log_line);
  write_json(cfg.output.directory, "sweep.json", j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_validate_kernel(const Flags& flags) {
  const RunConfig cfg = load(flags);
  const auto ks = make_kernel(cfg.kernel);
  const double gammas[] = {1.0, 2.0, 5.0, 10.0};
  const auto cert = validate_kernel(ks, gammas, 2048);
  const auto j = cert.to_json();
  write_json(cfg.output.directory, "kernel_certificate.json", j);
  std::cout << j.dump(2) << '\n';
  return cert.passed() ? 0 : 2;
}

int cmd_equilibrium(const Flags& flags) {
  const RunConfig cfg = load(flags);
  const auto grid = make_grid(cfg);
  const auto s = make_statistics(cfg);
  const EquilibriumSpec e{cfg.initial.mu, cfg.initial.temperature, cfg.initial.bulk_velocity};
  const auto f = equilibrium_field(s, e, grid);
  std::filesystem::create_directories(cfg.output.directory);
  std::ofstream os(std::filesystem::path(cfg.output.directory) / "equilibrium.csv");
  os << "v_x,v_y,v_z,f\n" << std::setprecision(17);
  for (std::size_t n = 0; n < f.nodes(); ++n) {
    const Vec3& v = grid->velocity(n);
    os << v[0] << ',' << v[1] << ',' << v[2] << ',' << f.at(0, n) << '\n';
  }
  const auto m = conserved_moments(f);
  nlohmann::json j{{"grid", grid->header()},
                   {"alpha", cfg.alpha},
                   {"mass", m.mass},
                   {"momentum", {m.momentum[0], m.momentum[1], m.momentum[2]}},
                   {"energy", m.energy}};
  if (cfg.alpha == 1.0) {
    double dev = 0.0;
    for (std::size_t n = 0; n < f.nodes(); ++n)
      dev = std::max(dev, std::abs(f.at(0, n) - 1.0 / (std::exp(-e.log_ratio(grid->velocity(n))) + 1.0)));
    j["max_fermi_dirac_deviation"] = dev;
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic kinetic solver with fractional exclusion statistics on a torus"};
  app.require_subcommand(1);
  Flags flags;
  auto* run = app.add_subcommand("run", "single run");
  auto* conv = app.add_subcommand("converge", "resolution convergence study");
  auto* stab = app.add_subcommand("stability", "initial-data stability study");
  auto* sweep = app.add_subcommand("sweep", "one run per exclusion parameter in study.alphas");
  auto* vk = app.add_subcommand("validate-kernel", "certify the configured kernel");
  auto* eq = app.add_subcommand("equilibrium", "tabulate the configured equilibrium");
  for (auto* s : {run, conv, stab, sweep, vk, eq}) add_flags(s, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(flags);
    if (conv->parsed()) return cmd_converge(flags);
    if (stab->parsed()) return cmd_stability(flags);
    if (sweep->parsed()) return cmd_sweep(flags);
    if (vk->parsed()) return cmd_validate_kernel(flags);
    if (eq->parsed()) return cmd_equilibrium(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvariantBreach& e) {
    std::cerr << "invariant breach: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
