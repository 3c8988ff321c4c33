// Acceptance checks. Each invocation prints one line per criterion:
//
//   PASS|FAIL <id> <name>: <measurements> [<seconds> s of <budget> s]
//
// `report` prints the saved line of every criterion, C1 first.
//
// Shared long runs are produced once by `prepare <standard|soft|fermion>` and
// read back from <work>/<name>/summary.json; their wall time counts towards the
// budget of every criterion that uses them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "haldane/collision.hpp"
#include "haldane/config.hpp"
#include "haldane/diagnostics.hpp"
#include "haldane/runner.hpp"
#include "haldane/solver.hpp"
#include "naive_oracle.hpp"

using namespace haldane;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(4) << x;
  return os.str();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

RunConfig prepared_config(const std::string& name) {
  RunConfig cfg = standard_config();
  cfg.scenario = name;
  if (name == "soft") {
    cfg.kernel.model = "soft";
    cfg.kernel.c = 1.0;
    cfg.kernel.eta = 1.0;
    cfg.kernel.gamma = 0.5;
    cfg.kernel.gamma_prime = 0.1;
  } else if (name == "fermion") {
    cfg.alpha = 1.0;
  } else if (name != "standard") {
    throw std::invalid_argument("unknown prepared run '" + name + "'");
  }
  return cfg;
}

json load_summary(const fs::path& work, const std::string& name) {
  std::ifstream is(work / name / "summary.json");
  if (!is) throw std::runtime_error("missing " + (work / name / "summary.json").string() + "; run prepare " + name);
  return json::parse(is);
}

// Bimodal data, one separation per cell; the largest projection defect of Q for each nv.
std::vector<double> residual_study(double alpha) {
  const double seps[] = {1.0, 1.5, 2.0, 2.5};
  std::vector<double> defects;
  for (int nv : {8, 16, 32}) {
    auto g = std::make_shared<const PhaseGrid>(build_grid(1, 4, 6.0, nv, "lebedev:5", 6.0));
    const StatisticsParam s{alpha, 6.0};
    DistributionField f(g, alpha);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t n = 0; n < f.nodes(); ++n) {
        const auto& v = g->velocity(n);
        const double d = seps[c];
        const double a = std::exp(-((v[0] - d) * (v[0] - d) + v[1] * v[1] + v[2] * v[2]));
        const double b = std::exp(-((v[0] + d) * (v[0] + d) + v[1] * v[1] + v[2] * v[2]) / 0.5);
        f.at(c, n) = std::min(0.95 / alpha, 0.4 / alpha * a + 0.6 / alpha * b);
      }
    defects.push_back(collision_operator(f, KernelSpec::band(1.0, 0.1, 0.1), s).max_defect);
  }
  return defects;
}

Verdict bounds_of(const json& sum, const std::string& name) {
  const double lo = sum["bounds"]["min"], hi = sum["bounds"]["max"], top = sum["bounds"]["ceiling"];
  const std::size_t clipped = sum["clipped"];
  return {lo >= 0.0 && hi <= top && clipped == 0,
          name + " min " + fmt(lo) + " max " + fmt(hi) + " <= " + fmt(top) + " clipped " + std::to_string(clipped)};
}

Verdict drifts_of(const json& sum, const std::string& name) {
  const double m = sum["max_drift"]["mass"], p = sum["max_drift"]["momentum"], e = sum["max_drift"]["energy"];
  return {m <= 1e-12 && p <= 1e-10 && e <= 1e-10,
          name + " drift mass " + fmt(m) + " momentum " + fmt(p) + " energy " + fmt(e)};
}

Verdict residual_order(double alpha) {
  const auto d = residual_study(alpha);
  const double r1 = d[0] / d[1], r2 = d[1] / d[2];
  return {r1 >= 2.0 && r2 >= 2.0, "projection residual nv 8/16/32 " + fmt(d[0]) + " " + fmt(d[1]) + " " + fmt(d[2]) +
                                      " (ratios " + fmt(r1) + ", " + fmt(r2) + ")"};
}

Verdict stationarity(double alpha) {
  auto g = std::make_shared<const PhaseGrid>(build_grid(1, 1, 6.0, 16, "lebedev:5", 6.0));
  const StatisticsParam s{alpha, 6.0};
  const auto f0 = equilibrium_field(s, EquilibriumSpec{}, g);
  const auto ks = KernelSpec::band(1.0, 0.1, 0.1);
  double qmax = 0.0;
  for (double q : collision_operator(f0, ks, s).raw) qmax = std::max(qmax, std::abs(q));
  SolverConfig cfg;
  cfg.homogeneous = true;
  RunOptions opts;
  double worst = 0.0;
  opts.on_step = [&](const DistributionField& f, std::size_t) { worst = std::max(worst, l1_distance(f, f0)); };
  run(f0, ks, s, cfg, opts);
  return {worst <= 1e-5 && qmax <= 1e-6 * ks.B0(),
          "sup_t ||f - f_eq||_1 " + fmt(worst) + " max |Q_raw| " + fmt(qmax)};
}

Verdict join(std::initializer_list<Verdict> vs) {
  Verdict out{true, ""};
  for (const auto& v : vs) {
    out.pass = out.pass && v.pass;
    out.detail += (out.detail.empty() ? "" : "; ") + v.detail;
  }
  return out;
}

struct Criterion {
  std::string name;
  double budget;                      // seconds
  std::vector<std::string> prepared;  // shared runs counted towards the budget
  std::function<Verdict(const fs::path&)> check;
};

std::map<std::string, Criterion> criteria() {
  std::map<std::string, Criterion> c;

  c["C1"] = {"hard bounds", 0.0, {}, [](const fs::path& w) {
               std::vector<Verdict> vs;
               for (const char* n : {"standard", "soft", "fermion"}) vs.push_back(bounds_of(load_summary(w, n), n));
               return join({vs[0], vs[1], vs[2]});
             }};

  c["C2"] = {"conservation", 600.0, {"standard"}, [](const fs::path& w) {
               return join({drifts_of(load_summary(w, "standard"), "standard"), residual_order(0.5)});
             }};

  c["C3"] = {"equilibrium stationarity", 120.0, {}, [](const fs::path&) { return stationarity(0.5); }};

  c["C4"] = {"naive oracle", 60.0, {}, [](const fs::path&) {
               // nv = 6 cut to the ball of radius 2.2 (88 nodes), 8 sphere nodes, one cell.
               auto g = std::make_shared<const PhaseGrid>(build_grid(1, 1, 2.2, 6, "product:2:4", 2.25));
               double worst = 0.0;
               int fields = 0;
               for (double alpha : {0.5, 1.0}) {
                 const StatisticsParam s{alpha, 2.2};
                 for (const auto& ks : {KernelSpec::band(1.0, 0.1, 0.1), KernelSpec::soft(1.0, 1.0, 0.5, 0.1)}) {
                   std::mt19937_64 rng(2024);
                   std::uniform_real_distribution<double> u(0.0, 1.0 / alpha);
                   for (int t = 0; t < 20; ++t, ++fields) {
                     DistributionField f(g, alpha);
                     for (auto& x : f.data()) x = u(rng);
                     const auto ref = oracle::naive_rates(f, ks, s, 0);
                     const auto got = loss_rates(f, ks, s, 0);
                     const auto q = gain(f, ks, s, 0);
                     double sa = 0, da = 0, sl = 0, dl = 0, sg = 0, dg = 0;
                     for (std::size_t n = 0; n < f.nodes(); ++n) {
                       const double qref = filling(s, f.at(0, n)) * ref.A[n];
                       sa = std::max(sa, std::abs(ref.A[n]));
                       da = std::max(da, std::abs(got.gain_rate[n] - ref.A[n]));
                       sl = std::max(sl, std::abs(ref.L[n]));
                       dl = std::max(dl, std::abs(got.loss_rate[n] - ref.L[n]));
                       sg = std::max(sg, std::abs(qref));
                       dg = std::max(dg, std::abs(q[n] - qref));
                     }
                     const double b = bony_functional(f, ks, s);
                     worst = std::max({worst, da / sa, dl / sl, dg / sg, std::abs(b - ref.bony) / std::abs(ref.bony)});
                   }
                 }
               }
               return Verdict{worst <= 1e-13, std::to_string(g->node_count()) + " velocities, " +
                                                  std::to_string(g->sphere().nodes.size()) + " sphere nodes, " +
                                                  std::to_string(fields) + " fields, max relative difference " +
                                                  fmt(worst)};
             }};

  c["C5"] = {"Bony envelope", 600.0, {"standard"}, [](const fs::path& w) {
               const auto f = load_summary(w, "standard")["fits"]["bony_affine"];
               const double r = f["max_ratio"];
               return Verdict{f["below_1_05_fit"].get<bool>(),
                              "max B(t)/fit(t) " + fmt(r) + " with fit " + fmt(f["slope"].get<double>()) + " (1+t) + " +
                                  fmt(f["intercept"].get<double>())};
             }};

  c["C6"] = {"mass-density bound", 600.0, {"standard", "soft"}, [](const fs::path& w) {
               const double t0 = load_summary(w, "standard")["fits"]["mass_density_doubling_window"];
               const auto soft = load_summary(w, "soft");
               const double chat = soft["fits"]["mass_density_growth"]["envelope"];
               return Verdict{t0 > 0.0 && std::isfinite(chat),
                              "standard M(t) <= 2 M(0) on [0, " + fmt(t0) + "]; soft M(t) <= M(0) exp(" + fmt(chat) +
                                  " t)"};
             }};

  c["C7"] = {"initial layer", 120.0, {}, [](const fs::path& w) {
               RunConfig cfg = standard_config();
               cfg.scenario = "near-saturation";
               cfg.initial.kind = "near-saturation";
               cfg.initial.core_radius = 2.0;
               cfg.solver.t_end = 0.2;
               const auto out = run_single(cfg, w / "near_saturation");
               const auto& r = out.result.records;
               const double slope = core_slope(r, 20);
               const auto b = bounds_of(out.summary, "near-saturation");
               return Verdict{slope < 0.0 && b.pass, "max_{|v|<3} f from " + fmt(r.front().core_max) + " to " +
                                                         fmt(r.back().core_max) + ", slope over 20 steps " +
                                                         fmt(slope) + "; " + b.detail};
             }};

  c["C8"] = {"resolution Cauchy property", 1200.0, {}, [](const fs::path&) {
               RunConfig cfg = standard_config();
               cfg.solver.t_end = 0.5;
               cfg.study.sample_times = {0.5};
               const auto rep = run_convergence_study(cfg, {4.0, 8.0, 16.0});
               const double a = rep.distances[0][0], b = rep.distances[1][0];
               return Verdict{a > b, "||f_4 - f_8||_1 " + fmt(a) + " > ||f_8 - f_16||_1 " + fmt(b)};
             }};

  c["C9"] = {"L1 stability", 1200.0, {}, [](const fs::path&) {
               const auto rep = run_stability_study(standard_config(), {1e-2, 1e-3, 1e-4});
               std::string d;
               for (const auto& m : rep.members) d += "eps " + fmt(m.epsilon) + " ratio " + fmt(m.ratio) + "; ";
               return Verdict{rep.spread <= 3.0, d + "spread " + fmt(rep.spread)};
             }};

  c["C10"] = {"tail decay", 300.0, {"soft"}, [](const fs::path& w) {
                const json t = load_summary(w, "soft")["fits"]["tail_slope"];
                if (t.is_null()) return Verdict{false, "tail mass vanished; no slope"};
                const double slope = t;
                return Verdict{slope <= -1.0, "soft tail log-log slope over lambda 2,3,4: " + fmt(slope)};
              }};

  c["C11"] = {"fermion reduction", 300.0, {"fermion"}, [](const fs::path& w) {
                auto g = std::make_shared<const PhaseGrid>(build_grid(1, 1, 6.0, 16, "lebedev:5", 6.0));
                const EquilibriumSpec e{};
                const auto f = equilibrium_field({1.0, 6.0}, e, g);
                double dev = 0.0;
                for (std::size_t n = 0; n < f.nodes(); ++n) {
                  const double fd = 1.0 / (std::exp(norm2(g->velocity(n))) + 1.0);
                  dev = std::max(dev, std::abs(f.at(0, n) - fd));
                }
                const auto sum = load_summary(w, "fermion");
                return join({Verdict{dev <= 1e-10, "max |f_eq - Fermi-Dirac| " + fmt(dev)}, bounds_of(sum, "fermion"),
                             drifts_of(sum, "fermion"), residual_order(1.0), stationarity(1.0)});
              }};
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  app.require_subcommand(1);
  std::string work = "acceptance";
  std::string which;
  auto* prep = app.add_subcommand("prepare", "produce a shared run");
  prep->add_option("name", which, "standard, soft or fermion")->required();
  prep->add_option("--work", work, "working directory");
  auto* report = app.add_subcommand("report", "print the saved verdict of every criterion");
  report->add_option("--work", work, "working directory");
  auto* check = app.add_subcommand("check", "evaluate criteria");
  std::vector<std::string> ids;
  check->add_option("ids", ids, "criteria (C1..C11; all when empty)");
  check->add_option("--work", work, "working directory");
  CLI11_PARSE(app, argc, argv);

  try {
    if (prep->parsed()) {
      const auto cfg = prepared_config(which);
      const auto out = run_single(cfg, fs::path(work) / which, [](const std::string& s) { std::cerr << s << '\n'; });
      std::cout << "prepared " << which << " in " << fmt(out.summary["elapsed_seconds"].get<double>()) << " s\n";
      return 0;
    }

    const auto all = criteria();
    const fs::path results = fs::path(work) / "results";
    if (report->parsed()) {
      bool ok = true;
      for (int i = 1; i <= static_cast<int>(all.size()); ++i) {
        const std::string id = "C" + std::to_string(i);
        std::ifstream is(results / (id + ".txt"));
        std::string line;
        if (!is || !std::getline(is, line)) line = "FAIL " + id + ": not run";
        std::cout << line << '\n';
        ok = ok && line.rfind("PASS", 0) == 0;
      }
      return ok ? 0 : 1;
    }
    if (ids.empty())
      for (const auto& [id, _] : all) ids.push_back(id);
    bool ok = true;
    for (const auto& id : ids) {
      const auto it = all.find(id);
      if (it == all.end()) throw std::invalid_argument("unknown criterion " + id);
      const auto& c = it->second;
      fs::remove(results / (id + ".txt"));
      const auto t0 = Clock::now();
      Verdict v;
      try {
        v = c.check(work);
      } catch (const std::exception& e) {
        v = {false, std::string("error: ") + e.what()};
      }
      double elapsed = seconds_since(t0);
      for (const auto& p : c.prepared) {
        try {
          elapsed += load_summary(work, p)["elapsed_seconds"].get<double>();
        } catch (const std::exception&) {
        }
      }
      std::ostringstream time;
      time << std::fixed << std::setprecision(1) << elapsed << " s";
      if (c.budget > 0.0) {
        time << " of " << c.budget << " s";
        if (elapsed > c.budget) {
          v.pass = false;
          v.detail += "; over the runtime budget";
        }
      }
      std::ostringstream line;
      line << (v.pass ? "PASS " : "FAIL ") << id << ' ' << c.name << ": " << v.detail << " [" << time.str() << "]";
      std::cout << line.str() << std::endl;
      fs::create_directories(results);
      std::ofstream(results / (id + ".txt")) << line.str() << '\n';
      ok = ok && v.pass;
    }
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
