#include "haldane/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "haldane/collision.hpp"

namespace haldane {

Moments conserved_moments(const DistributionField& f) {
  const auto& grid = f.grid();
  const std::size_t n = f.nodes();
  // Sum over cells first, then weight by velocity.
  std::vector<double> column(n, 0.0);
  for (std::size_t c = 0; c < f.cells(); ++c) {
    const auto y = f.cell(c);
    for (std::size_t k = 0; k < n; ++k) column[k] += y[k];
  }
  const double w = grid.cell_volume() * grid.velocity_weight();
  Moments m;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3& v = grid.velocity(k);
    const double y = column[k] * w;
    m.mass += y;
    m.momentum[0] += v[0] * y;
    m.momentum[1] += v[1] * y;
    m.momentum[2] += v[2] * y;
    m.energy += norm2(v) * y;
    m.speed_mass += std::sqrt(norm2(v)) * y;
  }
  return m;
}

void SupTracker::update(const DistributionField& f) {
  if (sup_.size() != f.nodes()) sup_.assign(f.nodes(), 0.0);
  for (std::size_t c = 0; c < f.cells(); ++c) {
    const auto y = f.cell(c);
    for (std::size_t k = 0; k < sup_.size(); ++k) sup_[k] = std::max(sup_[k], y[k]);
  }
}

double sup_mass_density(const std::vector<double>& running_max, const PhaseGrid& grid) {
  double sum = 0.0;
  for (double y : running_max) sum += y;
  return sum * grid.velocity_weight();
}

double sup_x_mass(const DistributionField& f) {
  SupTracker t(f.nodes());
  t.update(f);
  return sup_mass_density(t.running_max(), f.grid());
}

double bony_functional(const DistributionField& f, const KernelSpec& ks, const StatisticsParam& s) {
  CollisionOperator op(f.grid_ptr(), ks, s);
  CollisionOperator::CellResult res;
  double sum = 0.0;
  for (std::size_t c = 0; c < f.cells(); ++c) {
    op.evaluate_cell(f.cell(c), res, true);
    sum += res.bony;
  }
  return sum * f.grid().cell_volume();
}

std::map<double, double> tail_mass(const DistributionField& f, const std::vector<double>& lambdas) {
  SupTracker t(f.nodes());
  t.update(f);
  const auto& grid = f.grid();
  std::map<double, double> out;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw std::invalid_argument("tail threshold lambda must be positive");
    double sum = 0.0;
    for (std::size_t k = 0; k < f.nodes(); ++k)
      if (norm2(grid.velocity(k)) > lambda * lambda) sum += t.running_max()[k];
    out[lambda] = sum * grid.velocity_weight();
  }
  return out;
}

double l1_distance(const DistributionField& f, const DistributionField& g) {
  if (!f.grid().same_layout(g.grid())) throw std::invalid_argument("l1_distance needs fields on the same grid");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.data().size(); ++i) sum += std::abs(f.data()[i] - g.data()[i]);
  return sum * f.grid().cell_volume() * f.grid().velocity_weight();
}

double core_max(const DistributionField& f, double radius) {
  const auto& grid = f.grid();
  double m = 0.0;
  for (std::size_t k = 0; k < f.nodes(); ++k) {
    if (!(norm2(grid.velocity(k)) < radius * radius)) continue;
    for (std::size_t c = 0; c < f.cells(); ++c) m = std::max(m, f.at(c, k));
  }
  return m;
}

std::vector<std::string> csv_columns(const std::vector<double>& lambdas) {
  std::vector<std::string> cols{"step", "t", "mass", "momentum_x", "momentum_y", "momentum_z", "energy",
                                "sup_mass_density", "bony_cumulative"};
  std::vector<double> sorted = lambdas;
  std::sort(sorted.begin(), sorted.end());
  for (double l : sorted) {
    std::ostringstream os;
    os << "tail_" << l;
    cols.push_back(os.str());
  }
  for (const char* c : {"layer_gap", "core_max", "projection_residual", "mass_drift", "momentum_drift",
                        "energy_drift", "picard_iterations", "clipped"})
    cols.emplace_back(c);
  return cols;
}

void write_csv_header(std::ostream& os, const std::vector<double>& lambdas) {
  const auto cols = csv_columns(lambdas);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

void write_csv_row(std::ostream& os, const DiagnosticsRecord& r) {
  std::ostringstream line;
  line << std::setprecision(17);
  line << r.step << ',' << r.t << ',' << r.mass << ',' << r.momentum[0] << ',' << r.momentum[1] << ','
       << r.momentum[2] << ',' << r.energy << ',' << r.sup_mass_density << ',' << r.bony_cumulative;
  for (const auto& [lambda, value] : r.tail_mass) line << ',' << value;
  line << ',' << r.layer_gap << ',' << r.core_max << ',' << r.projection_residual << ',' << r.mass_drift << ','
       << r.momentum_drift << ',' << r.energy_drift << ',' << r.picard_iterations << ',' << r.clipped << '\n';
  os << line.str();
}

nlohmann::json to_json(const DiagnosticsRecord& r) {
  nlohmann::json j;
  j["step"] = r.step;
  j["t"] = r.t;
  j["mass"] = r.mass;
  j["momentum"] = {r.momentum[0], r.momentum[1], r.momentum[2]};
  j["energy"] = r.energy;
  j["sup_mass_density"] = r.sup_mass_density;
  j["bony_cumulative"] = r.bony_cumulative;
  auto& tails = j["tail_mass"] = nlohmann::json::array();
  for (const auto& [lambda, value] : r.tail_mass) tails.push_back({{"lambda", lambda}, {"mass", value}});
  j["layer_gap"] = r.layer_gap;
  j["core_max"] = r.core_max;
  j["projection_residual"] = r.projection_residual;
  j["mass_drift"] = r.mass_drift;
  j["momentum_drift"] = r.momentum_drift;
  j["energy_drift"] = r.energy_drift;
  return j;
}

void fill_drifts(DiagnosticsRecord& r, const Moments& ref) {
  r.mass_drift = ref.mass > 0.0 ? std::abs(r.mass - ref.mass) / ref.mass : std::abs(r.mass);
  const double dp = std::sqrt((r.momentum[0] - ref.momentum[0]) * (r.momentum[0] - ref.momentum[0]) +
                              (r.momentum[1] - ref.momentum[1]) * (r.momentum[1] - ref.momentum[1]) +
                              (r.momentum[2] - ref.momentum[2]) * (r.momentum[2] - ref.momentum[2]));
  r.momentum_drift = ref.speed_mass > 0.0 ? dp / ref.speed_mass : dp;
  r.energy_drift = ref.energy > 0.0 ? std::abs(r.energy - ref.energy) / ref.energy : std::abs(r.energy);
}

}  // namespace haldane
