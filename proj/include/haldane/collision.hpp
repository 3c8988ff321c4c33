#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "haldane/grid.hpp"
#include "haldane/kernel.hpp"
#include "haldane/statistics.hpp"

namespace haldane {

/// v' = v - ((v - v_*) . n) n and v'_* = v_* + ((v - v_*) . n) n.
/// Throws std::invalid_argument when |n| differs from 1 by more than 1e-12.
std::pair<Vec3, Vec3> collision_geometry(const Vec3& v, const Vec3& v_star, const Vec3& n);

/// Per-node rates of the truncated operator, Q_j = F_j(f) * gain_rate - f * loss_rate.
struct CollisionRates {
  std::vector<double> gain_rate;
  std::vector<double> loss_rate;
};

/// Evaluates f and F(f) at off-lattice velocities for one spatial cell.
///
/// The log occupation ratio h = log(f / F(f)) of the cell is fitted by weighted
/// least squares to q = a + b.v + c|v|^2, giving the fitted equilibrium
/// M(v) = F^-1(e^q(v)). The residual f - M is interpolated multilinearly and
/// added back: f(v') = M(v') + sum_c w_c (f_c - M_c), clipped to [0, 1/alpha].
/// Equilibria have a zero residual, so detailed balance holds pointwise for
/// every sampled collision, and perturbations of f enter with partition of unity
/// weights. Lattice points outside the velocity ball count as empty. A rejected
/// fit (q = 0) reduces this to plain multilinear interpolation of f.
class PostCollisionSampler {
 public:
  PostCollisionSampler(const PhaseGrid& grid, const OccupationTable& table);

  void load(std::span<const double> cell_values);
  OccupationTable::Sample sample(const Vec3& v) const;

  /// Fitted (a, b1, b2, b3, c); all zero when the fit was rejected.
  const std::array<double, 5>& fit() const { return fit_; }
  double quadratic(const Vec3& v) const {
    return fit_[0] + fit_[1] * v[0] + fit_[2] * v[1] + fit_[3] * v[2] + fit_[4] * norm2(v);
  }
  /// Residual f - M on the lattice point (i, j, l); -M outside the ball.
  double residual(int i, int j, int l) const;

 private:
  const PhaseGrid* grid_;
  const OccupationTable* table_;
  int stride_;
  std::array<double, 5> fit_{};
  std::vector<double> residual_;  // padded lattice, one empty layer on each side
};

/// Brute-force friendly description of the sphere directions actually visited.
struct FoldedDirection {
  Vec3 n;
  double weight;
  bool paired;  // true when -n was folded into this entry
};

/// Truncated collision operator Q_j on a fixed grid, kernel and statistics.
///
/// Rates are computed by a direct quadrature: midpoint rule (weight dv^3) over
/// v_* nodes and the grid's sphere rule over n, restricted to chi_j = 1 pairs.
/// Each unordered pair {v, v_*} is visited once and antipodal sphere nodes are
/// folded together.
///
/// When every sphere direction is a multiple of an integer vector m with
/// |m|^2 <= 3 (Lebedev rules of order 3, 5 and 7) and the kernel is separable,
/// post-collision velocities fall on a few fixed shifted copies of the lattice.
/// Those copies are filled once per cell with the same sampler and the pair
/// loop reduces to table lookups. Results agree with the generic path up to
/// rounding of the sample positions.
class CollisionOperator {
 public:
  enum class Path { automatic, generic };

  CollisionOperator(std::shared_ptr<const PhaseGrid> grid, KernelSpec kernel, StatisticsParam stats,
                    Path path = Path::automatic);

  struct CellResult {
    std::vector<double> gain_rate;
    std::vector<double> loss_rate;
    /// Velocity integral of n1^2 [(v - v_*).n]^2 B chi_j f f_* F(f') F(f'_*).
    double bony = 0.0;
  };

  void evaluate_cell(std::span<const double> cell_values, CellResult& out, bool want_bony = false) const;

  const PhaseGrid& grid() const { return *grid_; }
  std::shared_ptr<const PhaseGrid> grid_ptr() const { return grid_; }
  const KernelSpec& kernel() const { return kernel_; }
  const StatisticsParam& statistics() const { return stats_; }
  const OccupationTable& table() const { return table_; }
  const std::vector<FoldedDirection>& directions() const { return directions_; }
  std::size_t pair_count() const { return pairs_.size(); }
  /// True when the lattice-aligned fast path is in use.
  bool lattice_path() const { return !aligned_.empty(); }

 private:
  struct Pair {
    std::uint32_t a;
    std::uint32_t b;
    std::uint32_t d2;  // squared lattice distance |i_a - i_b|^2
  };

  struct AlignedDirection {
    std::array<int, 3> m{};
    int K = 1;  // |m|^2
    double weight = 0.0;
    std::vector<int> proj;  // i . m per node
    std::ptrdiff_t stride_m = 0;
    // Per residue r of (i_a - i_b).m modulo K: sub-lattice and linear shift of v' and v'_*.
    std::array<int, 3> grid_pre{}, grid_post{};
    std::array<std::ptrdiff_t, 3> shift_pre{}, shift_post{};
  };

  void evaluate_generic(std::span<const double> y, std::span<const double> F, const PostCollisionSampler& sampler,
                        CellResult& out, bool want_bony) const;
  void evaluate_aligned(std::span<const double> y, std::span<const double> F, const PostCollisionSampler& sampler,
                        CellResult& out, bool want_bony) const;
  void setup_aligned();

  std::shared_ptr<const PhaseGrid> grid_;
  KernelSpec kernel_;
  StatisticsParam stats_;
  OccupationTable table_;
  std::vector<FoldedDirection> directions_;
  std::vector<Pair> pairs_;
  std::vector<double> radial_;    // radial kernel factor times dv^3, by d2
  std::vector<double> inv_dist_;  // 1 / sqrt(d2)

  std::vector<AlignedDirection> aligned_;
  std::vector<Vec3> offsets_;  // sub-lattice offsets in lattice units
  int pad_ = 0;
  int box_ = 0;
  double reach_ = 0.0;
  std::vector<std::ptrdiff_t> node_linear_;
};

/// Q_j^+ at every node of one cell.
std::vector<double> gain(const DistributionField& f, const KernelSpec& ks, const StatisticsParam& s,
                         std::size_t cell);

/// Rates A, L of one cell with Q_j^+ = F_j(f) A and Q_j^- = f L.
CollisionRates loss_rates(const DistributionField& f, const KernelSpec& ks, const StatisticsParam& s,
                          std::size_t cell);

/// Relative size of the mass, momentum and energy moments of a per-node array:
/// |sum phi_m delta| over sum |phi_m| |delta|, combined in the 2-norm over m.
double conservation_defect(std::span<const double> delta, const PhaseGrid& grid);

struct ProjectionReport {
  double defect_before = 0.0;
  double defect_after = 0.0;
  /// Number of values pulled back into [0, 1/alpha] after the correction.
  std::size_t clipped = 0;
  /// Nodes held at a bound while the rest absorbed the correction.
  std::size_t pinned = 0;
};

/// Weighted least-squares correction of delta so that its mass, momentum and
/// energy moments vanish: delta <- delta - mu .* (Phi lambda). Nodes with
/// mu = 0 are left untouched.
ProjectionReport project_conservative(std::span<double> delta, std::span<const double> mu,
                                      const PhaseGrid& grid);

/// As above for an update y0 + delta that must stay in [0, top], with weights
/// the larger of y (top - y) before and after the update. Nodes the
/// correction would push across a bound are pinned there and the correction is
/// recomputed on the remaining nodes until none crosses. Anything still outside
/// afterwards is left for the caller to clamp.
ProjectionReport project_conservative_bounded(std::span<double> delta, std::span<const double> y0, double top,
                                              const PhaseGrid& grid);

struct CollisionOperatorResult {
  std::vector<double> raw;        // F A - f L before correction, layout as the field
  std::vector<double> corrected;  // after the conservative projection
  double max_defect = 0.0;        // largest per-cell defect before correction
};

/// Q_j over all cells, raw and projected.
CollisionOperatorResult collision_operator(const DistributionField& f, const KernelSpec& ks,
                                           const StatisticsParam& s);

}  // namespace haldane
