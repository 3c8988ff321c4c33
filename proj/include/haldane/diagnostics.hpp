#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "haldane/grid.hpp"
#include "haldane/kernel.hpp"
#include "haldane/statistics.hpp"

namespace haldane {

struct Moments {
  double mass = 0.0;
  Vec3 momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
  /// Sum of |v| f, the scale used for relative momentum drift.
  double speed_mass = 0.0;
};

/// Quadrature sums with weights dx^k dv^3.
Moments conserved_moments(const DistributionField& f);

/// Running per-node maximum of f over cells and emitted snapshots.
///
/// The maximum over x is the same in the lab frame and along characteristics,
/// so the tracker can be fed lab-frame fields.
class SupTracker {
 public:
  SupTracker() = default;
  explicit SupTracker(std::size_t nodes) : sup_(nodes, 0.0) {}

  void update(const DistributionField& f);
  const std::vector<double>& running_max() const { return sup_; }
  std::vector<double>& running_max() { return sup_; }

 private:
  std::vector<double> sup_;
};

/// Integral over v of the running maximum, sum_v dv^3 sup.
double sup_mass_density(const std::vector<double>& running_max, const PhaseGrid& grid);

/// Sum over v of sup_x f times dv^3.
double sup_x_mass(const DistributionField& f);

/// Quadrature over (x, v, v_*, n) of n1^2 [(v - v_*).n]^2 B chi_j f f_* F(f') F(f'_*).
/// For k > 1 the same expression is returned; it is not certified there.
double bony_functional(const DistributionField& f, const KernelSpec& ks, const StatisticsParam& s);

/// lambda -> sum over |v| > lambda of sup_x f dv^3 (the x integral is over a unit torus).
std::map<double, double> tail_mass(const DistributionField& f, const std::vector<double>& lambdas);

/// sum dx^k dv^3 |f - g|; throws std::invalid_argument on different grids.
double l1_distance(const DistributionField& f, const DistributionField& g);

/// max of f over cells and nodes with |v| < radius.
double core_max(const DistributionField& f, double radius);

struct DiagnosticsRecord {
  std::size_t step = 0;
  double t = 0.0;
  double mass = 0.0;
  Vec3 momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
  double sup_mass_density = 0.0;
  double bony_cumulative = 0.0;
  std::map<double, double> tail_mass;
  double layer_gap = 0.0;
  double core_max = 0.0;
  double projection_residual = 0.0;
  double mass_drift = 0.0;
  double momentum_drift = 0.0;
  double energy_drift = 0.0;
  std::size_t picard_iterations = 0;
  std::size_t clipped = 0;
};

/// Column order of diagnostics.csv. tail_<lambda> columns follow bony_cumulative
/// in ascending lambda order.
std::vector<std::string> csv_columns(const std::vector<double>& lambdas);
void write_csv_header(std::ostream& os, const std::vector<double>& lambdas);
void write_csv_row(std::ostream& os, const DiagnosticsRecord& r);

nlohmann::json to_json(const DiagnosticsRecord& r);

/// Relative drifts against a reference: mass and energy by their own size,
/// momentum by sum |v| f since total momentum is often zero.
void fill_drifts(DiagnosticsRecord& r, const Moments& reference);

}  // namespace haldane
