#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "haldane/grid.hpp"

namespace haldane {

/// Exclusion parameter alpha in (0, 1]; alpha = 1 is the fermion case.
/// With j_level set, the regularised filling factor F_j replaces F_alpha
/// wherever the statistics enter (collision operator, equilibria).
struct StatisticsParam {
  double alpha = 0.5;
  std::optional<double> j_level;

  void validate() const;
  double ceiling() const { return 1.0 / alpha; }
  bool regularized() const { return j_level.has_value(); }
};

/// F_alpha(y) = (1 - alpha y)^alpha (1 + (1 - alpha) y)^(1 - alpha).
double filling_factor(const StatisticsParam& s, double y);

/// F_j(y) = (1 - alpha y) (1/j + 1 - alpha y)^(alpha - 1) (1 + (1 - alpha) y)^(1 - alpha).
double filling_factor_regularized(const StatisticsParam& s, double y);

/// F_j when s carries a regularisation level, F_alpha otherwise.
double filling(const StatisticsParam& s, double y);

/// d/dy log filling(s, y) on the open interval (0, 1/alpha).
double filling_log_derivative(const StatisticsParam& s, double y);

/// y / filling(s, y); strictly increasing on (0, 1/alpha).
double occupation_ratio(const StatisticsParam& s, double y);

/// Inverse of occupation_ratio in log form: the y with log(y / F(y)) = log_ratio.
/// Bisection to width 1e-8 on [0, 1/alpha - 1e-15], then Newton polish until the
/// log residual is <= 1e-12. Returns 1/alpha when the root lies above the
/// bracket. Throws std::runtime_error after 200 steps.
double occupation_from_log_ratio(const StatisticsParam& s, double log_ratio);

struct EquilibriumSpec {
  double mu = 0.0;
  double temperature = 1.0;
  Vec3 bulk_velocity{0.0, 0.0, 0.0};

  void validate() const;
  /// (mu - |v - u|^2) / T, the log of the occupation ratio at v.
  double log_ratio(const Vec3& v) const;
};

/// Haldane equilibrium, constant in x: y / F(y) = exp((mu - |v - u|^2) / T) at every node.
DistributionField equilibrium_field(const StatisticsParam& s, const EquilibriumSpec& e,
                                    std::shared_ptr<const PhaseGrid> grid);

/// Tabulated inverse of the occupation ratio used inside the collision loops.
///
/// Given h = log(y / F(y)) returns both y and F(y). Inside -40 <= h < h_max the
/// values come from cubic Hermite interpolation on a 1/128 grid in h, with
/// h_max = 40 or lower when the ratio saturates earlier (relative error
/// about 1e-10); outside, from the exact solver. For alpha = 1 the closed form
/// y = 1 / (1 + e^-h) is used.
class OccupationTable {
 public:
  struct Sample {
    double y;
    double F;
  };

  explicit OccupationTable(const StatisticsParam& s);

  Sample at_log_ratio(double h) const;
  /// Sample for y = 0.
  Sample empty() const { return {0.0, f_at_zero_}; }
  /// Sample for y = 1/alpha.
  Sample saturated() const { return {ceiling_, 0.0}; }
  /// log(y / F(y)) at y = 1/alpha - 1e-15, the largest ratio resolved in double precision.
  double saturation_log_ratio() const { return h_saturation_; }

  const StatisticsParam& statistics() const { return stats_; }

 private:
  Sample exact(double h) const;

  StatisticsParam stats_;
  double ceiling_;
  double f_at_zero_;
  double dlogf_at_zero_;
  double h_saturation_;
  bool fermion_;
  double h_min_ = -40.0;
  double h_max_ = 40.0;
  double inv_step_ = 128.0;
  // Per table node: y, dy/dh, F, dF/dh.
  std::vector<double> table_;
};

}  // namespace haldane
