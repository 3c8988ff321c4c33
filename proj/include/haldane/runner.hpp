#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "haldane/config.hpp"
#include "haldane/diagnostics.hpp"
#include "haldane/solver.hpp"

namespace haldane {

using Logger = std::function<void(const std::string&)>;

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y ~ intercept + slope x; needs two distinct x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Affine fit of bony_cumulative against (1 + t) and the largest ratio
/// B(t) / fit(t) over records with positive fitted value.
struct BonyEnvelope {
  LinearFit fit;  // in the variable 1 + t
  double max_ratio = 0.0;
  bool below_fit_everywhere = true;  // B(t) <= 1.05 fit(t) at every record
};
BonyEnvelope bony_envelope(const std::vector<DiagnosticsRecord>& records, double margin = 1.05);

/// Largest record time T0 such that M(t) <= factor M(0) for all records up to T0.
double mass_density_window(const std::vector<DiagnosticsRecord>& records, double factor = 2.0);

/// Smallest c with M(t) <= M(0) e^{c t} at every record, and the least-squares
/// slope of log(M(t)/M(0)) through the origin.
struct GrowthRate {
  double envelope = 0.0;
  double least_squares = 0.0;
};
GrowthRate mass_density_growth(const std::vector<DiagnosticsRecord>& records);

/// Log-log slope of tail_mass against lambda over the given thresholds.
double tail_slope(const DiagnosticsRecord& r, const std::vector<double>& lambdas);

/// Slope of core_max against t over the records with step <= steps.
double core_slope(const std::vector<DiagnosticsRecord>& records, std::size_t steps);

struct SingleRunOutcome {
  RunResult result;
  MollifyReport mollify;
  nlohmann::json summary;
};

/// Mollifies, runs and writes diagnostics.csv, summary.json and
/// checkpoint_final.bin into dir (skipped when dir is empty).
SingleRunOutcome run_single(const RunConfig& cfg, const std::filesystem::path& dir, const Logger& log = {});

/// Nearest-node injection of f onto the layout of target: each target node and
/// cell takes the value of the nearest node and cell of f, or 0 outside its ball.
DistributionField inject(const DistributionField& f, std::shared_ptr<const PhaseGrid> target);

struct ConvergenceReport {
  std::vector<double> j_levels;
  std::vector<double> times;
  /// distances[i][s]: L1 distance between levels i and i+1 at times[s].
  std::vector<std::vector<double>> distances;
  /// Fitted rate of log distance against log j at the last sample time.
  double rate = 0.0;
  bool decreasing = false;
  nlohmann::json to_json() const;
};

/// Runs every level on the lattice of cfg (v_extent fixed at cfg's value or
/// j_level) and compares consecutive levels on the finer layout.
ConvergenceReport run_convergence_study(const RunConfig& cfg, const std::vector<double>& j_levels,
                                        const Logger& log = {});

struct StabilityMember {
  double epsilon = 0.0;
  double initial_distance = 0.0;  // after clamping
  double ratio = 0.0;             // sup_t ||f_eps - f||_1 / eps
  std::size_t clamped = 0;
  bool exact_match = false;       // epsilon = 0
};

struct StabilityReport {
  std::vector<StabilityMember> members;
  /// max ratio / min ratio over members with epsilon > 0.
  double spread = 0.0;
  nlohmann::json to_json() const;
};

/// Adds a bump of L1 size epsilon at a seeded random place in phase space and
/// clamps to [0, 1/alpha]; returns the number of clamped values.
std::size_t perturb(DistributionField& f, double epsilon, std::uint64_t seed);

StabilityReport run_stability_study(const RunConfig& cfg, const std::vector<double>& epsilons,
                                    const Logger& log = {});

/// One single run per alpha in alphas, each written to dir/alpha_<alpha>.
/// Returns a table of the headline numbers per alpha.
nlohmann::json run_alpha_sweep(const RunConfig& cfg, const std::vector<double>& alphas,
                               const std::filesystem::path& dir, const Logger& log = {});

}  // namespace haldane
