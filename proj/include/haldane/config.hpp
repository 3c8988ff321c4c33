#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "haldane/grid.hpp"
#include "haldane/kernel.hpp"
#include "haldane/solver.hpp"
#include "haldane/statistics.hpp"

namespace haldane {

/// Parse or validation failure. line is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, int line, const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

struct GridConfig {
  int k = 1;
  int nx = 32;
  double j_level = 6.0;
  int nv = 16;
  std::string sphere = "lebedev:5";
  std::optional<double> v_extent;
};

struct KernelConfig {
  std::string model = "band";  // band | soft | zero
  double B0 = 1.0;
  double c = 1.0;
  double eta = 1.0;
  double gamma = 0.1;
  double gamma_prime = 0.1;
};

struct InitialConfig {
  std::string kind = "equilibrium-with-bump";  // equilibrium | equilibrium-with-bump | near-saturation | tabulated
  double mu = 0.0;
  double temperature = 1.0;
  Vec3 bulk_velocity{0.0, 0.0, 0.0};
  double amplitude = 0.2;
  double center = 0.5;
  double width = 0.1;
  double core_radius = 2.0;
  /// Checkpoint file holding the table for kind = tabulated.
  std::string path;
  std::optional<double> mollifier_width;
};

struct OutputConfig {
  std::string directory = "out";
  int cadence = 1;
  int checkpoint_every = 0;
  std::vector<double> tail_lambdas{1.0, 2.0, 3.0, 4.0, 5.0};
  double core_radius = 3.0;
};

struct StudyConfig {
  std::vector<double> j_levels{4.0, 8.0, 16.0};
  /// Times at which the convergence study compares levels; empty means t_end.
  std::vector<double> sample_times;
  std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
  std::vector<double> alphas{0.25, 0.5, 0.75, 1.0};
};

struct RunConfig {
  int schema_version = 1;
  std::string scenario = "standard";
  GridConfig grid;
  KernelConfig kernel;
  double alpha = 0.5;
  InitialConfig initial;
  SolverConfig solver;
  OutputConfig output;
  StudyConfig study;
  int workers = 1;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

constexpr int kSchemaVersion = 1;

/// Sections grid, kernel, statistics, initial and solver are required; output
/// and study are optional. Unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& cfg);

/// The standard acceptance scenario: k=1, nx=32, j=6, nv=16, band kernel
/// (1, 0.1, 0.1), alpha=0.5, dt=0.01, t_end=1, equilibrium with a 20% bump.
RunConfig standard_config();

std::shared_ptr<const PhaseGrid> make_grid(const RunConfig& cfg);
KernelSpec make_kernel(const KernelConfig& kc);
StatisticsParam make_statistics(const RunConfig& cfg);
InitialData make_initial_data(const RunConfig& cfg);

}  // namespace haldane
