#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "haldane/config.hpp"
#include "haldane/runner.hpp"

using namespace haldane;

namespace {

const char* kSmall = R"(schema_version: 1
scenario: small
grid:
  k: 1
  nx: 8
  j_level: 4
  nv: 8
  sphere: "lebedev:5"
kernel:
  model: band
  B0: 1
  gamma: 0.1
  gamma_prime: 0.1
statistics:
  alpha: 0.5
initial:
  kind: equilibrium-with-bump
solver:
  dt: 0.01
  t_end: 0.03
)";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("haldane_runner_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config parses with defaults") {
  const auto cfg = parse_config(kSmall);
  CHECK(cfg.grid.nx == 8);
  CHECK(cfg.grid.sphere == "lebedev:5");
  CHECK(cfg.kernel.model == "band");
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.initial.amplitude == 0.2);
  CHECK(cfg.solver.splitting == Splitting::strang);
  CHECK(cfg.output.cadence == 1);
  CHECK(cfg.workers == 1);
}

TEST_CASE("missing section is named") {
  std::string text = kSmall;
  const auto a = text.find("kernel:");
  const auto b = text.find("statistics:");
  text.erase(a, b - a);
  try {
    parse_config(text);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "kernel");
    CHECK(std::string(e.what()).find("kernel") != std::string::npos);
  }
}

TEST_CASE("errors carry line numbers") {
  std::string text = kSmall;
  text.replace(text.find("nv: 8"), 5, "nv: 7");
  try {
    parse_config(text);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "grid.nv");
    CHECK(e.line() == 7);
  }
  text = kSmall;
  text.replace(text.find("nx: 8"), 5, "nx: eight");
  try {
    parse_config(text);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "grid.nx");
    CHECK(e.line() == 5);
  }
  text = std::string(kSmall) + "bogus: 1\n";
  CHECK_THROWS_AS(parse_config(text), ConfigError);
  CHECK_THROWS_AS(parse_config("schema_version: 2\n" + std::string(kSmall).substr(18)), ConfigError);
  CHECK_THROWS_AS(parse_config("grid: [1, 2"), ConfigError);
}

TEST_CASE("config round trip") {
  auto cfg = parse_config(kSmall);
  cfg.grid.v_extent = 5.5;
  cfg.kernel = KernelConfig{"soft", 1.0, 2.0, 1.5, 0.4, 0.15};
  cfg.initial.bulk_velocity = {0.1, -0.2, 0.3};
  cfg.study.sample_times = {0.01, 0.02};
  cfg.seed = 1234567890123ULL;
  const auto text = serialize_config(cfg);
  const auto back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.grid.v_extent == cfg.grid.v_extent);
  CHECK(back.kernel.eta == 1.5);
  CHECK(back.initial.bulk_velocity == cfg.initial.bulk_velocity);
  CHECK(back.seed == cfg.seed);
  CHECK(back.study.sample_times == cfg.study.sample_times);
}

TEST_CASE("t_end = 0 reports the mollified moments") {
  auto cfg = parse_config(kSmall);
  cfg.solver.t_end = 0.0;
  const auto dir = scratch("t0");
  const auto out = run_single(cfg, dir);
  const auto f0 = mollify_initial(make_initial_data(cfg), make_grid(cfg));
  const auto m = conserved_moments(f0);
  CHECK(out.summary["steps"] == 0);
  CHECK(out.summary["final_moments"]["mass"].get<double>() == m.mass);
  CHECK(std::filesystem::exists(dir / "summary.json"));
  CHECK(std::filesystem::exists(dir / "checkpoint_final.bin"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("first csv row matches the mollified data and runs are deterministic") {
  const auto cfg = parse_config(kSmall);
  const auto d1 = scratch("a"), d2 = scratch("b");
  run_single(cfg, d1);
  run_single(cfg, d2);
  const auto csv = read_file(d1 / "diagnostics.csv");
  CHECK(csv == read_file(d2 / "diagnostics.csv"));

  std::istringstream is(csv);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  std::vector<double> cells;
  std::stringstream rs(row);
  for (std::string tok; std::getline(rs, tok, ',');) cells.push_back(std::stod(tok));
  const auto m = conserved_moments(mollify_initial(make_initial_data(cfg), make_grid(cfg)));
  CHECK(cells[0] == 0.0);
  CHECK(cells[2] == m.mass);
  CHECK(cells[6] == m.energy);
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("tabulated data from a checkpoint") {
  auto cfg = parse_config(kSmall);
  const auto dir = scratch("tab");
  run_single(cfg, dir);
  auto tab = cfg;
  tab.initial.kind = "tabulated";
  tab.initial.path = (dir / "checkpoint_final.bin").string();
  tab.solver.t_end = 0.0;
  const auto out = run_single(tab, {});
  CHECK(out.result.final_field.data().size() == make_grid(cfg)->cell_count() * make_grid(cfg)->node_count());
  std::filesystem::remove_all(dir);
}

TEST_CASE("convergence study bookkeeping") {
  auto cfg = parse_config(kSmall);
  cfg.grid.v_extent = 4.0;
  cfg.solver.t_end = 0.02;
  cfg.study.sample_times = {0.0, 0.02};
  const auto same = run_convergence_study(cfg, {4.0, 4.0, 6.0});
  CHECK(same.distances[0][0] == 0.0);
  CHECK(same.distances[0][1] == 0.0);
  CHECK(!same.decreasing);
  CHECK(same.to_json()["status"] == "FAILED");
  CHECK_THROWS(run_convergence_study(cfg, {4.0, 8.0}));
  CHECK_THROWS(run_convergence_study(cfg, {8.0, 4.0, 16.0}));
}

TEST_CASE("transport-only baseline decreases in j") {
  auto cfg = parse_config(kSmall);
  cfg.kernel.model = "zero";
  cfg.grid.nx = 64;
  cfg.grid.v_extent = 4.0;
  cfg.solver.t_end = 0.05;
  const auto rep = run_convergence_study(cfg, {4.0, 8.0, 16.0});
  CHECK(rep.decreasing);
}

TEST_CASE("nearest-node injection") {
  auto coarse = std::make_shared<const PhaseGrid>(build_grid(1, 4, 4.0, 8, "lebedev:3", 4.0));
  auto fine = std::make_shared<const PhaseGrid>(build_grid(1, 8, 8.0, 8, "lebedev:3", 4.0));
  DistributionField f(coarse, 0.5);
  for (std::size_t i = 0; i < f.data().size(); ++i) f.data()[i] = 0.001 * static_cast<double>(i % 101);
  const auto g = inject(f, fine);
  for (std::size_t c = 0; c < fine->cell_count(); ++c)
    for (std::size_t n = 0; n < fine->node_count(); ++n) CHECK(g.at(c, n) == f.at(c / 2, n));
}

TEST_CASE("stability perturbation") {
  auto cfg = parse_config(kSmall);
  auto f = mollify_initial(make_initial_data(cfg), make_grid(cfg));
  const auto f0 = f;
  CHECK(perturb(f, 0.0, 1) == 0);
  CHECK(f.data() == f0.data());
  perturb(f, 1e-3, 1);
  CHECK(l1_distance(f, f0) == doctest::Approx(1e-3).epsilon(1e-10));
  auto g = f0;
  auto h = f0;
  perturb(g, 1e-3, 99);
  perturb(h, 1e-3, 99);
  CHECK(g.data() == h.data());
  auto big = f0;
  CHECK(perturb(big, 50.0, 1) > 0);
  CHECK_NOTHROW(big.check_invariants());
}

TEST_CASE("stability study with a zero epsilon") {
  auto cfg = parse_config(kSmall);
  cfg.solver.t_end = 0.02;
  const auto rep = run_stability_study(cfg, {0.0, 1e-3, 1e-4});
  CHECK(rep.members[0].exact_match);
  CHECK(rep.members[0].ratio == 0.0);
  CHECK(rep.members[1].ratio > 0.0);
  CHECK(rep.spread >= 1.0);
  CHECK(rep.spread < 3.0);
}

TEST_CASE("fit helpers") {
  const auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK_THROWS(fit_line({1, 1}, {0, 1}));
  std::vector<DiagnosticsRecord> recs(4);
  for (int i = 0; i < 4; ++i) {
    recs[i].step = i;
    recs[i].t = 0.1 * i;
    recs[i].sup_mass_density = std::exp(0.5 * recs[i].t);
    recs[i].bony_cumulative = 2.0 * recs[i].t;
    recs[i].core_max = 1.0 - recs[i].t;
    recs[i].tail_mass = {{2.0, 1.0 / 4}, {3.0, 1.0 / 9}, {4.0, 1.0 / 16}};
  }
  CHECK(mass_density_growth(recs).envelope == doctest::Approx(0.5));
  CHECK(mass_density_window(recs) == doctest::Approx(0.3));
  CHECK(bony_envelope(recs).below_fit_everywhere);
  CHECK(core_slope(recs, 3) == doctest::Approx(-1.0));
  CHECK(tail_slope(recs[0], {2.0, 3.0, 4.0}) == doctest::Approx(-2.0));
}

TEST_CASE("alpha sweep runs one member per alpha") {
  auto cfg = parse_config(kSmall);
  cfg.solver.t_end = 0.02;
  const auto dir = scratch("sweep");
  const auto j = run_alpha_sweep(cfg, {0.5, 1.0}, dir);
  REQUIRE(j["members"].size() == 2);
  for (const auto& m : j["members"]) {
    const double a = m["alpha"];
    CHECK(m["bounds"]["max"].get<double>() <= 1.0 / a);
    CHECK(m["max_drift"]["mass"].get<double>() <= 1e-12);
  }
  CHECK(std::filesystem::exists(dir / "alpha_1" / "summary.json"));
  std::filesystem::remove_all(dir);

  std::string text = std::string(kSmall) + "study:\n  alphas: [0.5, 0]\n";
  CHECK_THROWS_AS(parse_config(text), ConfigError);
}
