#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace haldane {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec3& a) { return dot(a, a); }

/// Raised when a field leaves [0, 1/alpha] or turns non-finite.
class InvariantBreach : public std::runtime_error {
 public:
  InvariantBreach(const std::string& what, std::size_t cell, std::size_t node)
      : std::runtime_error(what), cell_(cell), node_(node) {}
  std::size_t cell() const { return cell_; }
  std::size_t node() const { return node_; }

 private:
  std::size_t cell_;
  std::size_t node_;
};

struct SphereNode {
  Vec3 n;
  double weight;
};

/// Quadrature on the unit sphere. Weights sum to 4*pi.
///
/// Recognised ids:
///   product:NT:NP   Gauss-Legendre in cos(theta) x trapezoid in phi
///   lebedev:3|5|7|9 octahedrally symmetric Lebedev rules
struct SphereRule {
  std::string id;
  std::vector<SphereNode> nodes;

  double weight_sum() const;
  /// True when every node n has a partner -n with the same weight.
  bool antipodal() const;
};

SphereRule make_sphere_rule(std::string_view id);

/// Periodic spatial grid on [0,1]^k, a Cartesian velocity lattice truncated to
/// the ball |v| <= j_level, and a sphere rule.
///
/// The velocity lattice has nv nodes per axis at dv*(i - nv/2 + 1/2) with
/// dv = 2*v_extent/nv, so it is symmetric under v -> -v and has no node at 0.
/// v_extent defaults to j_level. A larger j_level than v_extent keeps the
/// lattice fixed while relaxing the truncation.
class PhaseGrid {
 public:
  PhaseGrid(int k, int nx, double j_level, int nv, SphereRule sphere,
            std::optional<double> v_extent = std::nullopt);

  int k() const { return k_; }
  int nx() const { return nx_; }
  int nv() const { return nv_; }
  double j_level() const { return j_level_; }
  double v_extent() const { return v_extent_; }
  double dv() const { return dv_; }
  double dx() const { return 1.0 / nx_; }
  /// Radius of the retained velocity ball.
  double ball_radius() const;

  std::size_t cell_count() const { return cell_count_; }
  std::size_t node_count() const { return velocities_.size(); }

  const std::vector<Vec3>& velocities() const { return velocities_; }
  const Vec3& velocity(std::size_t node) const { return velocities_[node]; }
  const std::array<int, 3>& lattice_index(std::size_t node) const { return lattice_[node]; }
  /// Node id at lattice position, or -1 when the lattice point is outside the ball.
  int node_at(int i, int j, int l) const;
  /// Node id of -v for every node.
  std::size_t mirror(std::size_t node) const { return mirror_[node]; }

  /// Lattice coordinate of the first node along an axis.
  double lattice_origin() const { return -v_extent_ + 0.5 * dv_; }

  double velocity_weight() const { return dv_ * dv_ * dv_; }
  double cell_volume() const;

  /// Multi-index of a cell; unused axes are 0.
  std::array<int, 3> cell_index(std::size_t cell) const;
  std::size_t cell_id(const std::array<int, 3>& idx) const;
  Vec3 cell_center(std::size_t cell) const;

  const SphereRule& sphere() const { return sphere_; }

  /// One-line description embedded in every output file.
  std::string header() const;
  bool same_layout(const PhaseGrid& other) const;

 private:
  int k_;
  int nx_;
  double j_level_;
  int nv_;
  double v_extent_;
  double dv_;
  std::size_t cell_count_;
  SphereRule sphere_;
  std::vector<Vec3> velocities_;
  std::vector<std::array<int, 3>> lattice_;
  std::vector<int> lattice_to_node_;
  std::vector<std::size_t> mirror_;
};

PhaseGrid build_grid(int k, int nx, double j_level, int nv, std::string_view sphere_rule,
                     std::optional<double> v_extent = std::nullopt);

/// Inverse of PhaseGrid::header(); throws std::invalid_argument on malformed text.
PhaseGrid grid_from_header(const std::string& header);

/// Sharp pair truncation: 1 iff |v|^2 + |v_*|^2 <= j^2.
int chi_j(const Vec3& v, const Vec3& v_star, double j_level);

/// f sampled on (cell, node); values live in [0, 1/alpha].
class DistributionField {
 public:
  DistributionField(std::shared_ptr<const PhaseGrid> grid, double alpha, double time = 0.0);

  const PhaseGrid& grid() const { return *grid_; }
  std::shared_ptr<const PhaseGrid> grid_ptr() const { return grid_; }
  double alpha() const { return alpha_; }
  double ceiling() const { return 1.0 / alpha_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  std::size_t cells() const { return grid_->cell_count(); }
  std::size_t nodes() const { return grid_->node_count(); }

  double& at(std::size_t cell, std::size_t node) { return data_[cell * nodes() + node]; }
  double at(std::size_t cell, std::size_t node) const { return data_[cell * nodes() + node]; }
  std::span<double> cell(std::size_t c) { return {data_.data() + c * nodes(), nodes()}; }
  std::span<const double> cell(std::size_t c) const { return {data_.data() + c * nodes(), nodes()}; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Throws InvariantBreach at the first value outside [0, 1/alpha] or non-finite.
  void check_invariants() const;

 private:
  std::shared_ptr<const PhaseGrid> grid_;
  double alpha_;
  double time_;
  std::vector<double> data_;
};

}  // namespace haldane
