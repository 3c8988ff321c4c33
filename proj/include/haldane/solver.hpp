#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "haldane/collision.hpp"
#include "haldane/diagnostics.hpp"
#include "haldane/grid.hpp"
#include "haldane/kernel.hpp"
#include "haldane/statistics.hpp"

namespace haldane {

enum class Splitting { lie, strang };

struct SolverConfig {
  double dt = 0.01;
  double t_end = 1.0;
  /// Per-cell L1 change (weight dv^3) below which Picard refreezing stops.
  double picard_tol = 1e-10;
  /// Rate evaluations per collision step; 1 is the plain exponential step.
  int picard_max = 1;
  Splitting splitting = Splitting::strang;
  bool homogeneous = false;

  void validate() const;
  /// Number of steps; the last one is shortened to land on t_end.
  std::size_t steps() const;
  double step_length(std::size_t step) const;
};

/// Initial datum f0(x, v) before mollification.
struct InitialData {
  std::string kind;
  std::function<double(const Vec3& x, const Vec3& v)> f0;
  double alpha = 0.5;
  double j_level = 6.0;
  /// Width of the mollifier support; 1/j by default.
  double mollifier_width = 1.0 / 6.0;
};

/// Haldane equilibrium, constant in x.
InitialData equilibrium_data(const StatisticsParam& s, const EquilibriumSpec& e, double j_level);

/// f_eq(v) (1 + amplitude exp(-(d(x, center) / width)^2)), clamped to 1/alpha;
/// d is the periodic distance to the point (center, ..., center) in the first k axes.
InitialData equilibrium_bump_data(const StatisticsParam& s, const EquilibriumSpec& e, double j_level, int k = 1,
                                  double amplitude = 0.2, double center = 0.5, double width = 0.1);

/// 1/alpha on |v| <= core_radius; outside, the T = 1 equilibrium with
/// mu = core_radius^2, so the datum stays positive on the whole ball.
InitialData near_saturation_data(double alpha, double j_level, double core_radius = 2.0);

/// Values given on a grid; f0 returns the value of the nearest cell and lattice node.
InitialData tabulated_data(const DistributionField& table, double j_level);

struct MollifyReport {
  double rim_loss = 0.0;    // mass of the v-convolution that fell outside the ball
  double clamp_loss = 0.0;  // mass removed by min{f0, 1/alpha - 1/j}
  int x_stencil = 1;        // cells per axis in the x mollifier
  std::size_t v_stencil = 1;  // lattice offsets in the v mollifier
};

/// Clamp f0 at 1/alpha - 1/j, convolve with a product bump mollifier and restrict to the ball.
///
/// The x part has support [0, width]^k sampled at cell midpoints with
/// M = max(1, round(width / dx)) cells per axis, periodic. The v part uses the
/// lattice offsets with |dv| <= width, zero-extended outside the ball and not
/// renormalised; the loss is reported in MollifyReport::rim_loss.
DistributionField mollify_initial(const InitialData& data, std::shared_ptr<const PhaseGrid> grid,
                                  MollifyReport* report = nullptr);

/// Semi-Lagrangian shift of every velocity slice by dt * v along the spatial axes,
/// with periodic linear interpolation (exact permutation when dt * v is a multiple of dx).
DistributionField transport(const DistributionField& f, double dt);
void transport_in_place(DistributionField& f, double dt, int workers = 1);

/// Frozen residual factor R with F(y) = (1 - alpha y) R(y); R = 0 at saturation.
double frozen_residual(const StatisticsParam& s, double y);

/// Exact solution at dt of dy/dt = A (1 - alpha y) R - L y, clamped to [0, 1/alpha].
double exponential_update(double y0, double A, double L, double R, double alpha, double dt);

struct StepReport {
  double bony = 0.0;           // Bony integrand at the first evaluation, integrated over x
  double max_defect = 0.0;     // largest per-cell moment defect before projection
  std::size_t clipped = 0;     // values pulled back into bounds after projection
  std::size_t picard_iterations = 0;  // largest number of evaluations used by a cell
  std::size_t picard_unconverged = 0; // cells that hit picard_max above tolerance
};

/// Collision step with the operator, scratch space and worker count kept between steps.
class CollisionStepper {
 public:
  CollisionStepper(std::shared_ptr<const PhaseGrid> grid, KernelSpec ks, StatisticsParam s, SolverConfig cfg,
                   int workers = 1);

  StepReport step(DistributionField& f, double dt, bool want_bony) const;
  const CollisionOperator& op() const { return op_; }

 private:
  CollisionOperator op_;
  StatisticsParam stats_;
  SolverConfig cfg_;
  int workers_;
};

DistributionField exponential_collision_step(const DistributionField& f, const KernelSpec& ks,
                                             const StatisticsParam& s, const SolverConfig& cfg);

/// State needed to continue a run bit-identically.
struct RunState {
  std::size_t step = 0;
  double bony_cumulative = 0.0;
  std::vector<double> sup;  // running per-node maximum
  Moments reference;        // moments of the initial field
  std::uint64_t picard_warnings = 0;
  std::uint64_t clipped = 0;
};

struct RunOptions {
  int workers = 1;
  /// Emit a record every `cadence` steps (and always at the first and last step).
  int cadence = 1;
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;
  double core_radius = 3.0;
  std::vector<double> tail_lambdas{1.0, 2.0, 3.0, 4.0, 5.0};
  bool track_bony = true;
  std::function<void(const DiagnosticsRecord&)> on_record;
  std::function<void(const std::string&)> on_warning;
  /// Called after every step with the lab-frame field.
  std::function<void(const DistributionField&, std::size_t step)> on_step;
};

struct RunResult {
  DistributionField final_field;
  std::vector<DiagnosticsRecord> records;
  RunState state;
};

/// Time loop from an already mollified field. Throws InvariantBreach naming the
/// step, cell and node when a value leaves [0, 1/alpha].
RunResult run(DistributionField initial, const KernelSpec& ks, const StatisticsParam& s, const SolverConfig& cfg,
              const RunOptions& opts, const RunState* resume = nullptr);

/// Mollifies the datum on the grid, then runs.
RunResult run(const InitialData& data, const KernelSpec& ks, const StatisticsParam& s,
              std::shared_ptr<const PhaseGrid> grid, const SolverConfig& cfg, const RunOptions& opts);

/// Binary little-endian checkpoint: magic "HKCKPT01", format version, grid
/// header, alpha, time, field and RunState.
void write_checkpoint(const std::filesystem::path& path, const DistributionField& f, const RunState& state);

struct Checkpoint {
  std::string grid_header;
  double alpha = 0.0;
  double time = 0.0;
  std::vector<double> data;
  RunState state;
};

Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Rebuilds the field of a checkpoint on a grid with the same header.
DistributionField restore_field(const Checkpoint& c, std::shared_ptr<const PhaseGrid> grid);

}  // namespace haldane
