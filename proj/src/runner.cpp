#include "haldane/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace haldane {

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line fit needs two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("line fit needs two distinct abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

BonyEnvelope bony_envelope(const std::vector<DiagnosticsRecord>& records, double margin) {
  std::vector<double> x, y;
  for (const auto& r : records) {
    x.push_back(1.0 + r.t);
    y.push_back(r.bony_cumulative);
  }
  BonyEnvelope env;
  env.fit = fit_line(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double bound = env.fit.intercept + env.fit.slope * x[i];
    if (bound > 0.0) env.max_ratio = std::max(env.max_ratio, y[i] / bound);
    if (y[i] > margin * bound) env.below_fit_everywhere = false;
  }
  return env;
}

double mass_density_window(const std::vector<DiagnosticsRecord>& records, double factor) {
  if (records.empty()) return 0.0;
  const double m0 = records.front().sup_mass_density;
  double t0 = records.front().t;
  for (const auto& r : records) {
    if (r.sup_mass_density > factor * m0) break;
    t0 = r.t;
  }
  return t0;
}

GrowthRate mass_density_growth(const std::vector<DiagnosticsRecord>& records) {
  GrowthRate g;
  if (records.empty()) return g;
  const double m0 = records.front().sup_mass_density;
  const double t_start = records.front().t;
  double stt = 0.0, sty = 0.0;
  for (const auto& r : records) {
    const double t = r.t - t_start;
    if (!(t > 0.0) || !(m0 > 0.0)) continue;
    const double l = std::log(r.sup_mass_density / m0);
    g.envelope = std::max(g.envelope, l / t);
    stt += t * t;
    sty += t * l;
  }
  if (stt > 0.0) g.least_squares = sty / stt;
  return g;
}

double tail_slope(const DiagnosticsRecord& r, const std::vector<double>& lambdas) {
  std::vector<double> x, y;
  for (double l : lambdas) {
    auto it = r.tail_mass.find(l);
    if (it == r.tail_mass.end()) throw std::invalid_argument("record has no tail mass for the requested lambda");
    if (!(it->second > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    x.push_back(std::log(l));
    y.push_back(std::log(it->second));
  }
  return fit_line(x, y).slope;
}

double core_slope(const std::vector<DiagnosticsRecord>& records, std::size_t steps) {
  std::vector<double> x, y;
  for (const auto& r : records) {
    if (r.step > steps) continue;
    x.push_back(r.t);
    y.push_back(r.core_max);
  }
  return fit_line(x, y).slope;
}

namespace {

nlohmann::json moments_json(const Moments& m) {
  return {{"mass", m.mass}, {"momentum", {m.momentum[0], m.momentum[1], m.momentum[2]}}, {"energy", m.energy}};
}

RunOptions options_from(const RunConfig& cfg, const Logger& log) {
  RunOptions o;
  o.workers = cfg.workers;
  o.cadence = cfg.output.cadence;
  o.tail_lambdas = cfg.output.tail_lambdas;
  o.core_radius = cfg.output.core_radius;
  if (log) o.on_warning = log;
  return o;
}

}  // namespace

SingleRunOutcome run_single(const RunConfig& cfg, const std::filesystem::path& dir, const Logger& log) {
  cfg.validate();
  const auto grid = make_grid(cfg);
  const auto ks = make_kernel(cfg.kernel);
  const auto s = make_statistics(cfg);
  MollifyReport mollify;
  DistributionField f0 = mollify_initial(make_initial_data(cfg), grid, &mollify);
  const Moments initial = conserved_moments(f0);

  RunOptions opts = options_from(cfg, log);
  std::ofstream csv;
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    csv.open(dir / "diagnostics.csv");
    if (!csv) throw std::runtime_error("cannot write " + (dir / "diagnostics.csv").string());
    write_csv_header(csv, opts.tail_lambdas);
    opts.on_record = [&csv](const DiagnosticsRecord& r) {
      write_csv_row(csv, r);
      csv.flush();
    };
    if (cfg.output.checkpoint_every > 0) {
      opts.checkpoint_every = cfg.output.checkpoint_every;
      opts.checkpoint_dir = dir / "checkpoints";
    }
  }

  double lo = *std::min_element(f0.data().begin(), f0.data().end());
  double hi = *std::max_element(f0.data().begin(), f0.data().end());
  opts.on_step = [&lo, &hi](const DistributionField& f, std::size_t) {
    const auto [a, b] = std::minmax_element(f.data().begin(), f.data().end());
    lo = std::min(lo, *a);
    hi = std::max(hi, *b);
  };
  const auto start = std::chrono::steady_clock::now();
  SingleRunOutcome out{run(std::move(f0), ks, s, cfg.solver, opts), mollify, {}};
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  const auto& recs = out.result.records;

  auto& j = out.summary;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = cfg.scenario;
  j["grid"] = grid->header();
  j["kernel"] = ks.model_name();
  j["alpha"] = cfg.alpha;
  j["steps"] = out.result.state.step;
  j["t_final"] = out.result.final_field.time();
  j["mollifier"] = {{"rim_loss", out.mollify.rim_loss},
                    {"clamp_loss", out.mollify.clamp_loss},
                    {"x_stencil", out.mollify.x_stencil},
                    {"v_stencil", out.mollify.v_stencil}};
  j["initial_moments"] = moments_json(initial);
  j["final_moments"] = moments_json(conserved_moments(out.result.final_field));
  double md = 0.0, pd = 0.0, ed = 0.0, res = 0.0;
  for (const auto& r : recs) {
    md = std::max(md, r.mass_drift);
    pd = std::max(pd, r.momentum_drift);
    ed = std::max(ed, r.energy_drift);
    res = std::max(res, r.projection_residual);
  }
  j["max_drift"] = {{"mass", md}, {"momentum", pd}, {"energy", ed}};
  j["max_projection_residual"] = res;
  j["clipped"] = out.result.state.clipped;
  j["bounds"] = {{"min", lo}, {"max", hi}, {"ceiling", s.ceiling()}};
  j["elapsed_seconds"] = elapsed.count();
  j["picard_warnings"] = out.result.state.picard_warnings;
  j["final_record"] = to_json(recs.back());

  auto& fits = j["fits"] = nlohmann::json::object();
  if (recs.size() >= 2) {
    const auto env = bony_envelope(recs);
    fits["bony_affine"] = {{"slope", env.fit.slope},
                           {"intercept", env.fit.intercept},
                           {"max_ratio", env.max_ratio},
                           {"below_1_05_fit", env.below_fit_everywhere}};
    fits["mass_density_doubling_window"] = mass_density_window(recs);
    const auto g = mass_density_growth(recs);
    fits["mass_density_growth"] = {{"envelope", g.envelope}, {"least_squares", g.least_squares}};
    fits["core_max_slope"] = core_slope(recs, recs.back().step);
  }
  std::vector<double> tail_fit;
  for (double l : {2.0, 3.0, 4.0})
    if (recs.back().tail_mass.count(l)) tail_fit.push_back(l);
  if (tail_fit.size() >= 2) {
    const double slope = tail_slope(recs.back(), tail_fit);
    fits["tail_slope"] = std::isfinite(slope) ? nlohmann::json(slope) : nlohmann::json(nullptr);
  }

  if (!dir.empty()) {
    write_checkpoint(dir / "checkpoint_final.bin", out.result.final_field, out.result.state);
    std::ofstream sj(dir / "summary.json");
    sj << j.dump(2) << '\n';
    if (!sj) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
  }
  return out;
}

DistributionField inject(const DistributionField& f, std::shared_ptr<const PhaseGrid> target) {
  const auto& src = f.grid();
  if (src.k() != target->k()) throw std::invalid_argument("injection needs the same spatial dimension");
  DistributionField out(target, f.alpha(), f.time());
  // Nearest source node for every target node.
  std::vector<int> node_map(target->node_count(), -1);
  for (std::size_t n = 0; n < target->node_count(); ++n) {
    const Vec3& v = target->velocity(n);
    std::array<int, 3> idx{};
    for (int a = 0; a < 3; ++a)
      idx[a] = static_cast<int>(std::floor((v[a] - src.lattice_origin()) / src.dv() + 0.5));
    bool inside = true;
    for (int a = 0; a < 3; ++a) inside = inside && idx[a] >= 0 && idx[a] < src.nv();
    if (inside) node_map[n] = src.node_at(idx[0], idx[1], idx[2]);
  }
  for (std::size_t c = 0; c < target->cell_count(); ++c) {
    const Vec3 x = target->cell_center(c);
    std::array<int, 3> ci{0, 0, 0};
    for (int a = 0; a < src.k(); ++a)
      ci[a] = static_cast<int>(std::floor(x[a] * src.nx())) % src.nx();
    const auto from = f.cell(src.cell_id(ci));
    auto to = out.cell(c);
    for (std::size_t n = 0; n < to.size(); ++n) to[n] = node_map[n] >= 0 ? from[node_map[n]] : 0.0;
  }
  return out;
}

nlohmann::json ConvergenceReport::to_json() const {
  nlohmann::json j;
  j["status"] = decreasing ? "OK" : "FAILED";
  j["j_levels"] = j_levels;
  j["times"] = times;
  j["distances"] = distances;
  j["rate"] = rate;
  return j;
}

ConvergenceReport run_convergence_study(const RunConfig& cfg, const std::vector<double>& j_levels,
                                        const Logger& log) {
  cfg.validate();
  if (j_levels.size() < 3) throw std::invalid_argument("convergence study needs at least three levels");
  for (std::size_t i = 1; i < j_levels.size(); ++i)
    if (j_levels[i] < j_levels[i - 1]) throw std::invalid_argument("convergence levels must be ascending");

  ConvergenceReport rep;
  rep.j_levels = j_levels;
  rep.times = cfg.study.sample_times.empty() ? std::vector<double>{cfg.solver.t_end} : cfg.study.sample_times;
  std::sort(rep.times.begin(), rep.times.end());

  const double extent = cfg.grid.v_extent.value_or(cfg.grid.j_level);
  std::vector<std::vector<DistributionField>> snaps(j_levels.size());
  std::vector<std::shared_ptr<const PhaseGrid>> grids;
  for (std::size_t i = 0; i < j_levels.size(); ++i) {
    RunConfig level = cfg;
    level.grid.j_level = j_levels[i];
    level.grid.v_extent = extent;
    if (log) {
      std::ostringstream os;
      os << "level j=" << j_levels[i];
      log(os.str());
    }
    const auto grid = make_grid(level);
    grids.push_back(grid);
    DistributionField f0 = mollify_initial(make_initial_data(level), grid);
    auto& out = snaps[i];
    auto capture = [&](const DistributionField& f) {
      while (out.size() < rep.times.size() && std::abs(f.time() - rep.times[out.size()]) < 1e-9) out.push_back(f);
    };
    capture(f0);
    RunOptions opts = options_from(level, log);
    opts.track_bony = false;
    opts.cadence = std::numeric_limits<int>::max();
    opts.on_step = [&](const DistributionField& f, std::size_t) { capture(f); };
    run(std::move(f0), make_kernel(level.kernel), make_statistics(level), level.solver, opts);
    if (out.size() != rep.times.size()) throw std::invalid_argument("sample times must fall on step boundaries");
  }

  rep.distances.assign(j_levels.size() - 1, std::vector<double>(rep.times.size(), 0.0));
  for (std::size_t i = 0; i + 1 < j_levels.size(); ++i) {
    const auto& fine = grids[i + 1];
    for (std::size_t s = 0; s < rep.times.size(); ++s)
      rep.distances[i][s] = l1_distance(inject(snaps[i][s], fine), inject(snaps[i + 1][s], fine));
  }

  rep.decreasing = true;
  for (std::size_t s = 0; s < rep.times.size(); ++s)
    for (std::size_t i = 1; i < rep.distances.size(); ++i)
      if (!(rep.distances[i][s] < rep.distances[i - 1][s])) rep.decreasing = false;

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rep.distances.size(); ++i) {
    const double d = rep.distances[i].back();
    if (d > 0.0) {
      lx.push_back(std::log(j_levels[i]));
      ly.push_back(std::log(d));
    }
  }
  if (lx.size() >= 2 && lx.front() != lx.back()) rep.rate = -fit_line(lx, ly).slope;
  return rep;
}

namespace {

double bump(double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

}  // namespace

std::size_t perturb(DistributionField& f, double epsilon, std::uint64_t seed) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("perturbation size must be non-negative");
  if (epsilon == 0.0) return 0;
  const auto& grid = f.grid();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec3 x0{0.0, 0.0, 0.0}, v0{};
  for (int a = 0; a < grid.k(); ++a) x0[a] = unit(rng);
  const double half = 0.5 * grid.ball_radius();
  for (int a = 0; a < 3; ++a) v0[a] = (2.0 * unit(rng) - 1.0) * half;
  const double wx = 0.2;
  const double wv = std::max(1.5, 2.0 * grid.dv());

  std::vector<double> shape(f.data().size(), 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < f.cells(); ++c) {
    const Vec3 x = grid.cell_center(c);
    double r2 = 0.0;
    for (int a = 0; a < grid.k(); ++a) {
      double d = std::abs(x[a] - x0[a]);
      d = std::min(d, 1.0 - d);
      r2 += d * d;
    }
    const double bx = bump(std::sqrt(r2) / wx);
    if (bx == 0.0) continue;
    for (std::size_t n = 0; n < f.nodes(); ++n) {
      const Vec3& v = grid.velocity(n);
      const Vec3 d{v[0] - v0[0], v[1] - v0[1], v[2] - v0[2]};
      const double g = bx * bump(std::sqrt(norm2(d)) / wv);
      shape[c * f.nodes() + n] = g;
      total += g;
    }
  }
  total *= grid.cell_volume() * grid.velocity_weight();
  if (!(total > 0.0)) throw std::runtime_error("perturbation bump misses every grid point");
  std::size_t clamped = 0;
  const double top = f.ceiling();
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const double y = f.data()[i] + epsilon * shape[i] / total;
    if (y > top) ++clamped;
    f.data()[i] = std::min(y, top);
  }
  return clamped;
}

nlohmann::json StabilityReport::to_json() const {
  nlohmann::json j;
  auto& m = j["members"] = nlohmann::json::array();
  for (const auto& s : members)
    m.push_back({{"epsilon", s.epsilon},
                 {"initial_distance", s.initial_distance},
                 {"ratio", s.ratio},
                 {"clamped", s.clamped},
                 {"exact_match", s.exact_match}});
  j["spread"] = spread;
  return j;
}

StabilityReport run_stability_study(const RunConfig& cfg, const std::vector<double>& epsilons, const Logger& log) {
  cfg.validate();
  const auto grid = make_grid(cfg);
  const auto ks = make_kernel(cfg.kernel);
  const auto s = make_statistics(cfg);
  const DistributionField f0 = mollify_initial(make_initial_data(cfg), grid);

  std::vector<std::vector<double>> base{f0.data()};
  {
    RunOptions opts = options_from(cfg, log);
    opts.track_bony = false;
    opts.cadence = std::numeric_limits<int>::max();
    opts.on_step = [&](const DistributionField& f, std::size_t) { base.push_back(f.data()); };
    if (log) log("stability base run");
    run(f0, ks, s, cfg.solver, opts);
  }

  auto distance = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum * grid->cell_volume() * grid->velocity_weight();
  };

  StabilityReport rep;
  for (double eps : epsilons) {
    StabilityMember m;
    m.epsilon = eps;
    if (eps == 0.0) {
      m.exact_match = true;
      rep.members.push_back(m);
      continue;
    }
    DistributionField fe = f0;
    m.clamped = perturb(fe, eps, cfg.seed);
    if (log && m.clamped > 0) {
      std::ostringstream os;
      os << "epsilon " << eps << ": clamped " << m.clamped << " values to 1/alpha";
      log(os.str());
    }
    m.initial_distance = distance(fe.data(), base[0]);
    double sup = m.initial_distance;
    RunOptions opts = options_from(cfg, log);
    opts.track_bony = false;
    opts.cadence = std::numeric_limits<int>::max();
    opts.on_step = [&](const DistributionField& f, std::size_t step) {
      sup = std::max(sup, distance(f.data(), base.at(step)));
    };
    if (log) {
      std::ostringstream os;
      os << "stability member epsilon=" << eps;
      log(os.str());
    }
    run(std::move(fe), ks, s, cfg.solver, opts);
    m.ratio = sup / eps;
    rep.members.push_back(m);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& m : rep.members) {
    if (m.exact_match) continue;
    lo = std::min(lo, m.ratio);
    hi = std::max(hi, m.ratio);
  }
  rep.spread = hi > 0.0 && lo > 0.0 ? hi / lo : 0.0;
  return rep;
}

nlohmann::json run_alpha_sweep(const RunConfig& cfg, const std::vector<double>& alphas, const std::filesystem::path& dir,
                     const Logger& log) {
  if (alphas.empty()) throw std::invalid_argument("alpha sweep needs at least one alpha");
  nlohmann::json rows = nlohmann::json::array();
  for (double a : alphas) {
    RunConfig member = cfg;
    member.alpha = a;
    member.validate();
    std::ostringstream name;
    name << "alpha_" << a;
    if (log) log(name.str());
    const auto out = run_single(member, dir.empty() ? dir : dir / name.str(), log);
    const auto& j = out.summary;
    rows.push_back({{"alpha", a},
                    {"max_drift", j["max_drift"]},
                    {"bounds", j["bounds"]},
                    {"final_moments", j["final_moments"]},
                    {"fits", j["fits"]}});
  }
  return {{"schema_version", kSchemaVersion}, {"scenario", cfg.scenario}, {"members", rows}};
}

}  // namespace haldane
