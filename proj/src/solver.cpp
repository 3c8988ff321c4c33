#include "haldane/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "parallel.hpp"

namespace haldane {

// ---------------------------------------------------------------------------
// Configuration

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("solver dt must be positive");
  if (!(t_end >= 0.0)) throw std::invalid_argument("solver t_end must be non-negative");
  if (!(picard_tol > 0.0)) throw std::invalid_argument("solver picard_tol must be positive");
  if (picard_max < 1) throw std::invalid_argument("solver picard_max must be at least 1");
}

std::size_t SolverConfig::steps() const {
  if (t_end <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

double SolverConfig::step_length(std::size_t step) const {
  const std::size_t n = steps();
  if (step + 1 < n) return dt;
  return t_end - static_cast<double>(n - 1) * dt;
}

// ---------------------------------------------------------------------------
// Initial data

InitialData equilibrium_data(const StatisticsParam& s, const EquilibriumSpec& e, double j_level) {
  s.validate();
  e.validate();
  InitialData d;
  d.kind = "equilibrium";
  d.alpha = s.alpha;
  d.j_level = j_level;
  d.mollifier_width = 1.0 / j_level;
  d.f0 = [s, e](const Vec3&, const Vec3& v) { return occupation_from_log_ratio(s, e.log_ratio(v)); };
  return d;
}

InitialData equilibrium_bump_data(const StatisticsParam& s, const EquilibriumSpec& e, double j_level, int k,
                                  double amplitude, double center, double width) {
  s.validate();
  e.validate();
  if (!(width > 0.0)) throw std::invalid_argument("bump width must be positive");
  if (k < 1 || k > 3) throw std::invalid_argument("bump dimension k must be 1, 2 or 3");
  InitialData d;
  d.kind = "equilibrium-with-bump";
  d.alpha = s.alpha;
  d.j_level = j_level;
  d.mollifier_width = 1.0 / j_level;
  const double top = s.ceiling();
  d.f0 = [s, e, k, amplitude, center, width, top](const Vec3& x, const Vec3& v) {
    double r2 = 0.0;
    for (int a = 0; a < k; ++a) {
      double dx = std::abs(x[a] - center);
      dx = std::min(dx, 1.0 - dx);
      r2 += dx * dx;
    }
    const double bump = 1.0 + amplitude * std::exp(-r2 / (width * width));
    return std::clamp(occupation_from_log_ratio(s, e.log_ratio(v)) * bump, 0.0, top);
  };
  return d;
}

InitialData near_saturation_data(double alpha, double j_level, double core_radius) {
  InitialData d;
  d.kind = "near-saturation";
  d.alpha = alpha;
  d.j_level = j_level;
  d.mollifier_width = 1.0 / j_level;
  const StatisticsParam s{alpha, j_level};
  s.validate();
  const EquilibriumSpec tail{core_radius * core_radius, 1.0, {0.0, 0.0, 0.0}};
  d.f0 = [s, tail, core_radius](const Vec3&, const Vec3& v) {
    return norm2(v) <= core_radius * core_radius ? s.ceiling() : occupation_from_log_ratio(s, tail.log_ratio(v));
  };
  return d;
}

InitialData tabulated_data(const DistributionField& table, double j_level) {
  InitialData d;
  d.kind = "tabulated";
  d.alpha = table.alpha();
  d.j_level = j_level;
  d.mollifier_width = 1.0 / j_level;
  auto values = std::make_shared<const std::vector<double>>(table.data());
  auto grid = table.grid_ptr();
  d.f0 = [values, grid](const Vec3& x, const Vec3& v) {
    std::array<int, 3> cell{0, 0, 0};
    for (int a = 0; a < grid->k(); ++a) cell[a] = static_cast<int>(std::floor(x[a] * grid->nx()));
    std::array<int, 3> idx{};
    for (int a = 0; a < 3; ++a)
      idx[a] = static_cast<int>(std::lround(v[a] / grid->dv() + 0.5 * grid->nv() - 0.5));
    const int node = grid->node_at(idx[0], idx[1], idx[2]);
    if (node < 0) return 0.0;
    return (*values)[grid->cell_id(cell) * grid->node_count() + static_cast<std::size_t>(node)];
  };
  return d;
}

namespace {

double bump_profile(double r) {
  if (!(r > -1.0 && r < 1.0)) return 0.0;
  return std::exp(-1.0 / (1.0 - r * r));
}

}  // namespace

DistributionField mollify_initial(const InitialData& data, std::shared_ptr<const PhaseGrid> grid,
                                  MollifyReport* report) {
  if (!data.f0) throw std::invalid_argument("initial data has no f0");
  if (!(data.alpha > 0.0 && data.alpha <= 1.0)) throw std::invalid_argument("initial data alpha must lie in (0, 1]");
  if (!(data.j_level >= 1.0)) throw std::invalid_argument("initial data j level must be >= 1");
  if (!(data.mollifier_width > 0.0)) throw std::invalid_argument("mollifier width must be positive");
  const auto& g = *grid;
  const std::size_t cells = g.cell_count();
  const std::size_t nodes = g.node_count();
  const double cap = 1.0 / data.alpha - 1.0 / data.j_level;
  const double w = g.cell_volume() * g.velocity_weight();
  MollifyReport rep;

  std::vector<double> base(cells * nodes);
  for (std::size_t c = 0; c < cells; ++c) {
    const Vec3 x = g.cell_center(c);
    for (std::size_t k = 0; k < nodes; ++k) {
      const double v0 = std::max(0.0, data.f0(x, g.velocity(k)));
      const double v = std::min(v0, cap);
      rep.clamp_loss += (v0 - v) * w;
      base[c * nodes + k] = v;
    }
  }

  // x part: M cells per axis, shifts 0..M-1, weights from the bump at (m + 1/2) / M.
  const int M = std::max(1, static_cast<int>(std::lround(data.mollifier_width / g.dx())));
  rep.x_stencil = M;
  std::vector<double> wx(M);
  double sx = 0.0;
  for (int m = 0; m < M; ++m) sx += wx[m] = bump_profile(2.0 * (m + 0.5) / M - 1.0);
  for (auto& x : wx) x /= sx;

  std::vector<double> tmp(base.size());
  for (int axis = 0; axis < g.k(); ++axis) {
    std::fill(tmp.begin(), tmp.end(), 0.0);
    for (std::size_t c = 0; c < cells; ++c) {
      const auto idx = g.cell_index(c);
      for (int m = 0; m < M; ++m) {
        auto src = idx;
        src[axis] = idx[axis] - m;
        const std::size_t sc = g.cell_id(src);
        for (std::size_t k = 0; k < nodes; ++k) tmp[c * nodes + k] += wx[m] * base[sc * nodes + k];
      }
    }
    base.swap(tmp);
  }

  // v part: lattice offsets within the mollifier radius, zero outside the ball.
  struct Offset {
    int di, dj, dl;
    double w;
  };
  std::vector<Offset> offsets;
  const int reach = static_cast<int>(std::floor(data.mollifier_width / g.dv()));
  double sv = 0.0;
  for (int i = -reach; i <= reach; ++i)
    for (int j = -reach; j <= reach; ++j)
      for (int l = -reach; l <= reach; ++l) {
        const double r = g.dv() * std::sqrt(static_cast<double>(i * i + j * j + l * l)) / data.mollifier_width;
        const double b = (i == 0 && j == 0 && l == 0) ? bump_profile(0.0) : bump_profile(r);
        if (b <= 0.0) continue;
        offsets.push_back({i, j, l, b});
        sv += b;
      }
  for (auto& o : offsets) o.w /= sv;
  rep.v_stencil = offsets.size();

  DistributionField out(grid, data.alpha);
  double before = 0.0, after = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    auto dst = out.cell(c);
    for (std::size_t k = 0; k < nodes; ++k) {
      before += base[c * nodes + k];
      // Scatter so that mass leaving the ball is visible as rim loss.
      const auto& idx = g.lattice_index(k);
      for (const auto& o : offsets) {
        const int t = g.node_at(idx[0] + o.di, idx[1] + o.dj, idx[2] + o.dl);
        if (t >= 0) dst[static_cast<std::size_t>(t)] += o.w * base[c * nodes + k];
      }
    }
    for (std::size_t k = 0; k < nodes; ++k) {
      dst[k] = std::clamp(dst[k], 0.0, cap);
      after += dst[k];
    }
  }
  rep.rim_loss = (before - after) * w;
  if (report) *report = rep;
  out.check_invariants();
  return out;
}

// ---------------------------------------------------------------------------
// Transport

void transport_in_place(DistributionField& f, double dt, int workers) {
  const auto& g = f.grid();
  const int nx = g.nx();
  const std::size_t nodes = f.nodes();
  const std::size_t cells = f.cells();
  auto& data = f.data();

  detail::parallel_for(nodes, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> line(nx), shifted(nx);
    for (std::size_t k = begin; k < end; ++k) {
      const Vec3& v = g.velocity(k);
      for (int axis = 0; axis < g.k(); ++axis) {
        double s = dt * v[axis] * nx;
        const double rounded = std::round(s);
        if (std::abs(s - rounded) < 1e-12 * std::max(1.0, std::abs(s))) s = rounded;
        const double fl = std::floor(s);
        const double theta = s - fl;
        const auto n = static_cast<long long>(fl);
        std::size_t stride = 1;
        for (int b = axis + 1; b < g.k(); ++b) stride *= static_cast<std::size_t>(nx);
        for (std::size_t c0 = 0; c0 < cells; ++c0) {
          // Visit each line once, from the cell with index 0 along the axis.
          if ((c0 / stride) % static_cast<std::size_t>(nx) != 0) continue;
          for (int i = 0; i < nx; ++i) line[i] = data[(c0 + i * stride) * nodes + k];
          for (int i = 0; i < nx; ++i) {
            const auto a = static_cast<int>(((i - n) % nx + nx) % nx);
            const int b = (a + nx - 1) % nx;
            shifted[i] = theta == 0.0 ? line[a] : (1.0 - theta) * line[a] + theta * line[b];
          }
          for (int i = 0; i < nx; ++i) data[(c0 + i * stride) * nodes + k] = shifted[i];
        }
      }
    }
  });
}

DistributionField transport(const DistributionField& f, double dt) {
  DistributionField out = f;
  transport_in_place(out, dt);
  return out;
}

// ---------------------------------------------------------------------------
// Collision step

double frozen_residual(const StatisticsParam& s, double y) {
  const double top = s.ceiling();
  if (y >= top) return 0.0;
  if (y <= 0.0) return filling(s, 0.0);
  const double vac = 1.0 - s.alpha * y;
  if (s.alpha == 1.0) return 1.0;
  const double b = 1.0 - s.alpha;
  if (s.j_level) return std::exp(b * (std::log1p(b * y) - std::log(1.0 / *s.j_level + vac)));
  return std::exp(b * (std::log1p(b * y) - std::log(vac)));
}

double exponential_update(double y0, double A, double L, double R, double alpha, double dt) {
  const double gain = A * R;
  const double lambda = alpha * gain + L;
  if (!(lambda > 0.0)) return y0;
  const double y_inf = gain / lambda;
  const double y = y_inf + (y0 - y_inf) * std::exp(-lambda * dt);
  return std::clamp(y, 0.0, 1.0 / alpha);
}

CollisionStepper::CollisionStepper(std::shared_ptr<const PhaseGrid> grid, KernelSpec ks, StatisticsParam s,
                                   SolverConfig cfg, int workers)
    : op_(std::move(grid), std::move(ks), s), stats_(s), cfg_(cfg), workers_(std::max(1, workers)) {
  cfg_.validate();
}

StepReport CollisionStepper::step(DistributionField& f, double dt, bool want_bony) const {
  const auto& g = f.grid();
  const std::size_t cells = f.cells();
  const std::size_t nodes = f.nodes();
  const double alpha = stats_.alpha;
  const double top = stats_.ceiling();
  const double dv3 = g.velocity_weight();

  struct CellOutcome {
    double bony = 0.0;
    double defect = 0.0;
    std::size_t clipped = 0;
    std::size_t iterations = 0;
    bool converged = true;
  };
  std::vector<CellOutcome> outcome(cells);

  detail::parallel_for(cells, workers_, [&](std::size_t begin, std::size_t end) {
    CollisionOperator::CellResult res;
    std::vector<double> y0(nodes), yk(nodes), ynew(nodes), freeze(nodes), delta(nodes);
    for (std::size_t c = begin; c < end; ++c) {
      auto cell = f.cell(c);
      std::copy(cell.begin(), cell.end(), y0.begin());
      yk = y0;
      auto& out = outcome[c];
      out.converged = cfg_.picard_max == 1;
      for (int it = 0; it < cfg_.picard_max; ++it) {
        if (it == 0) {
          freeze = y0;
        } else {
          for (std::size_t k = 0; k < nodes; ++k) freeze[k] = 0.5 * (y0[k] + yk[k]);
        }
        op_.evaluate_cell(freeze, res, want_bony && it == 0);
        if (it == 0) out.bony = res.bony;
        for (std::size_t k = 0; k < nodes; ++k)
          ynew[k] = exponential_update(y0[k], res.gain_rate[k], res.loss_rate[k], frozen_residual(stats_, freeze[k]),
                                       alpha, dt);
        ++out.iterations;
        if (it > 0) {
          double change = 0.0;
          for (std::size_t k = 0; k < nodes; ++k) change += std::abs(ynew[k] - yk[k]);
          yk.swap(ynew);
          if (change * dv3 <= cfg_.picard_tol) {
            out.converged = true;
            break;
          }
        } else {
          yk.swap(ynew);
        }
      }

      for (std::size_t k = 0; k < nodes; ++k) delta[k] = yk[k] - y0[k];
      const auto proj = project_conservative_bounded(delta, y0, top, g);
      out.defect = proj.defect_before;
      for (std::size_t k = 0; k < nodes; ++k) {
        const double y = y0[k] + delta[k];
        const double clamped = std::clamp(y, 0.0, top);
        if (clamped != y) ++out.clipped;
        cell[k] = clamped;
      }
    }
  });

  StepReport rep;
  for (const auto& o : outcome) {
    rep.bony += o.bony;
    rep.max_defect = std::max(rep.max_defect, o.defect);
    rep.clipped += o.clipped;
    rep.picard_iterations = std::max(rep.picard_iterations, o.iterations);
    if (!o.converged) ++rep.picard_unconverged;
  }
  rep.bony *= g.cell_volume();
  return rep;
}

DistributionField exponential_collision_step(const DistributionField& f, const KernelSpec& ks,
                                             const StatisticsParam& s, const SolverConfig& cfg) {
  CollisionStepper stepper(f.grid_ptr(), ks, s, cfg);
  DistributionField out = f;
  stepper.step(out, cfg.dt, false);
  return out;
}

// ---------------------------------------------------------------------------
// Time loop

namespace {

DiagnosticsRecord make_record(const DistributionField& f, const RunState& st, const RunOptions& opts,
                              double residual, std::size_t picard, std::size_t clipped) {
  DiagnosticsRecord r;
  r.step = st.step;
  r.t = f.time();
  const auto m = conserved_moments(f);
  r.mass = m.mass;
  r.momentum = m.momentum;
  r.energy = m.energy;
  r.sup_mass_density = sup_mass_density(st.sup, f.grid());
  r.bony_cumulative = st.bony_cumulative;
  r.tail_mass = tail_mass(f, opts.tail_lambdas);
  double mx = 0.0;
  for (double y : f.data()) mx = std::max(mx, y);
  r.layer_gap = f.ceiling() - mx;
  r.core_max = core_max(f, opts.core_radius);
  r.projection_residual = residual;
  r.picard_iterations = picard;
  r.clipped = clipped;
  fill_drifts(r, st.reference);
  return r;
}

void check_step(const DistributionField& f, std::size_t step) {
  try {
    f.check_invariants();
  } catch (const InvariantBreach& e) {
    std::ostringstream os;
    os << "step " << step << ": " << e.what();
    throw InvariantBreach(os.str(), e.cell(), e.node());
  }
}

}  // namespace

RunResult run(DistributionField f, const KernelSpec& ks, const StatisticsParam& s, const SolverConfig& cfg,
              const RunOptions& opts, const RunState* resume) {
  cfg.validate();
  s.validate();
  if (opts.cadence < 1) throw std::invalid_argument("diagnostics cadence must be at least 1");
  if (std::abs(f.alpha() - s.alpha) > 0.0) throw std::invalid_argument("field alpha differs from the statistics");
  f.check_invariants();

  RunResult result{f, {}, {}};
  RunState& st = result.state;
  const std::size_t steps = cfg.steps();
  auto emit = [&](DiagnosticsRecord r) {
    if (opts.on_record) opts.on_record(r);
    result.records.push_back(std::move(r));
  };

  if (resume) {
    st = *resume;
    if (st.sup.size() != f.nodes()) throw std::invalid_argument("checkpoint tracker does not match the grid");
  } else {
    st.reference = conserved_moments(f);
    st.sup.assign(f.nodes(), 0.0);
    SupTracker tracker(f.nodes());
    tracker.update(f);
    st.sup = tracker.running_max();
    emit(make_record(f, st, opts, 0.0, 0, 0));
  }

  if (st.step < steps) {
    CollisionStepper stepper(f.grid_ptr(), ks, s, cfg, opts.workers);
    const bool collide = ks.model() != KernelSpec::Model::zero;
    SupTracker tracker;
    tracker.running_max() = st.sup;

    for (std::size_t n = st.step; n < steps; ++n) {
      const double h = cfg.step_length(n);
      StepReport rep;
      if (cfg.homogeneous) {
        if (collide) rep = stepper.step(f, h, opts.track_bony);
      } else if (cfg.splitting == Splitting::strang) {
        transport_in_place(f, 0.5 * h, opts.workers);
        if (collide) rep = stepper.step(f, h, opts.track_bony);
        transport_in_place(f, 0.5 * h, opts.workers);
      } else {
        if (collide) rep = stepper.step(f, h, opts.track_bony);
        transport_in_place(f, h, opts.workers);
      }
      check_step(f, n + 1);
      f.set_time(n + 1 == steps ? cfg.t_end : static_cast<double>(n + 1) * cfg.dt);
      st.step = n + 1;
      st.bony_cumulative += h * rep.bony;
      st.clipped += rep.clipped;
      if (rep.picard_unconverged > 0) {
        ++st.picard_warnings;
        if (opts.on_warning) {
          std::ostringstream os;
          os << "step " << st.step << ": Picard iteration reached picard_max=" << cfg.picard_max << " in "
             << rep.picard_unconverged << " cells";
          opts.on_warning(os.str());
        }
      }
      if (opts.on_step) opts.on_step(f, st.step);

      const bool last = st.step == steps;
      if (st.step % static_cast<std::size_t>(opts.cadence) == 0 || last) {
        tracker.update(f);
        st.sup = tracker.running_max();
        emit(make_record(f, st, opts, rep.max_defect, rep.picard_iterations, rep.clipped));
      }
      if (opts.checkpoint_every > 0 && (st.step % static_cast<std::size_t>(opts.checkpoint_every) == 0 || last)) {
        std::ostringstream name;
        name << "checkpoint_" << st.step << ".bin";
        std::filesystem::create_directories(opts.checkpoint_dir);
        write_checkpoint(opts.checkpoint_dir / name.str(), f, st);
      }
    }
  }
  result.final_field = std::move(f);
  return result;
}

RunResult run(const InitialData& data, const KernelSpec& ks, const StatisticsParam& s,
              std::shared_ptr<const PhaseGrid> grid, const SolverConfig& cfg, const RunOptions& opts) {
  return run(mollify_initial(data, std::move(grid)), ks, s, cfg, opts);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'H', 'K', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  template <class T>
  void put(T v) {
    v = to_little(v);
    os_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_u64(std::uint64_t v) { put(v); }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void put_vector(const std::vector<double>& v) {
    put_u64(v.size());
    for (double x : v) put_f64(x);
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  template <class T>
  T get() {
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is_) throw std::runtime_error("checkpoint is truncated");
    return to_little(v);
  }
  std::uint64_t get_u64() { return get<std::uint64_t>(); }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 20)) throw std::runtime_error("checkpoint header string is too long");
    std::string s(n, '\0');
    is_.read(s.data(), n);
    if (!is_) throw std::runtime_error("checkpoint is truncated");
    return s;
  }
  std::vector<double> get_vector() {
    const auto n = get_u64();
    if (n > (std::uint64_t{1} << 34)) throw std::runtime_error("checkpoint array is too long");
    std::vector<double> v(n);
    for (auto& x : v) x = get_f64();
    return v;
  }

 private:
  std::istream& is_;
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const DistributionField& f, const RunState& st) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint file " + path.string());
  os.write(kMagic, sizeof(kMagic));
  Writer w(os);
  w.put(kVersion);
  w.put_string(f.grid().header());
  w.put_f64(f.alpha());
  w.put_f64(f.time());
  w.put_vector(f.data());
  w.put_u64(st.step);
  w.put_f64(st.bony_cumulative);
  w.put_vector(st.sup);
  for (double x : {st.reference.mass, st.reference.momentum[0], st.reference.momentum[1], st.reference.momentum[2],
                   st.reference.energy, st.reference.speed_mass})
    w.put_f64(x);
  w.put_u64(st.picard_warnings);
  w.put_u64(st.clipped);
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint file " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  Reader r(is);
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.grid_header = r.get_string();
  c.alpha = r.get_f64();
  c.time = r.get_f64();
  c.data = r.get_vector();
  c.state.step = r.get_u64();
  c.state.bony_cumulative = r.get_f64();
  c.state.sup = r.get_vector();
  c.state.reference.mass = r.get_f64();
  for (auto& x : c.state.reference.momentum) x = r.get_f64();
  c.state.reference.energy = r.get_f64();
  c.state.reference.speed_mass = r.get_f64();
  c.state.picard_warnings = r.get_u64();
  c.state.clipped = r.get_u64();
  return c;
}

DistributionField restore_field(const Checkpoint& c, std::shared_ptr<const PhaseGrid> grid) {
  if (grid->header() != c.grid_header)
    throw std::invalid_argument("checkpoint grid '" + c.grid_header + "' does not match '" + grid->header() + "'");
  DistributionField f(grid, c.alpha, c.time);
  if (c.data.size() != f.data().size()) throw std::invalid_argument("checkpoint field size does not match the grid");
  f.data() = c.data;
  f.check_invariants();
  return f;
}

}  // namespace haldane
