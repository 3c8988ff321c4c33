#include "haldane/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace haldane {

namespace {

std::string format_error(const std::string& field, int line, const std::string& message) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  if (!field.empty()) os << field << ": ";
  os << message;
  return os.str();
}

int line_of(const YAML::Node& n) {
  const auto m = n.Mark();
  return m.line >= 0 ? m.line + 1 : 0;
}

// A mapping section whose keys are checked against the allowed set.
class Section {
 public:
  Section(const YAML::Node& node, std::string name, std::set<std::string> allowed)
      : node_(node), name_(std::move(name)) {
    if (!node_.IsMap()) throw ConfigError(name_, line_of(node_), "expected a mapping");
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) throw ConfigError(name_ + "." + key, line_of(kv.first), "unknown key");
    }
  }

  template <class T>
  void get(const std::string& key, T& out) const {
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(name_ + "." + key, line_of(v), "cannot read value '" + scalar_text(v) + "'");
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) const {
    if (!node_[key]) return;
    T v{};
    get(key, v);
    out = v;
  }

  void get(const std::string& key, Vec3& out) const {
    std::vector<double> v;
    get(key, v);
    if (!node_[key]) return;
    if (v.size() != 3) throw ConfigError(name_ + "." + key, line_of(node_[key]), "expected three numbers");
    out = {v[0], v[1], v[2]};
  }

  int line(const std::string& key) const { return node_[key] ? line_of(node_[key]) : line_of(node_); }

 private:
  static std::string scalar_text(const YAML::Node& v) { return v.IsScalar() ? v.Scalar() : "<non-scalar>"; }

  YAML::Node node_;
  std::string name_;
};

YAML::Node required(const YAML::Node& root, const std::string& name) {
  const YAML::Node n = root[name];
  if (!n) throw ConfigError(name, 0, "missing section '" + name + "'");
  return n;
}

// Line of each field, kept so validation errors can point into the file.
struct Lines {
  std::map<std::string, int> at;
  int operator()(const std::string& field) const {
    auto it = at.find(field);
    return it == at.end() ? 0 : it->second;
  }
};

thread_local const Lines* g_lines = nullptr;

void fail(const std::string& field, const std::string& message) {
  throw ConfigError(field, g_lines ? (*g_lines)(field) : 0, message);
}

}  // namespace

ConfigError::ConfigError(const std::string& field, int line, const std::string& message)
    : std::runtime_error(format_error(field, line, message)), field_(field), line_(line) {}

void RunConfig::validate() const {
  if (schema_version != kSchemaVersion) fail("schema_version", "unsupported schema version");
  if (grid.k < 1 || grid.k > 3) fail("grid.k", "must be 1, 2 or 3");
  if (grid.nx < 1) fail("grid.nx", "must be at least 1");
  if (!(grid.j_level > 0.0)) fail("grid.j_level", "must be positive");
  if (grid.nv < 2 || grid.nv % 2) fail("grid.nv", "must be even and at least 2");
  if (grid.v_extent && !(*grid.v_extent > 0.0)) fail("grid.v_extent", "must be positive");
  try {
    make_sphere_rule(grid.sphere);
  } catch (const std::exception& e) {
    fail("grid.sphere", e.what());
  }
  try {
    make_kernel(kernel);
  } catch (const std::exception& e) {
    fail("kernel", e.what());
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("statistics.alpha", "must lie in (0, 1]");
  static const std::set<std::string> kinds{"equilibrium", "equilibrium-with-bump", "near-saturation", "tabulated"};
  if (!kinds.count(initial.kind)) fail("initial.kind", "unknown initial datum '" + initial.kind + "'");
  if (!(initial.temperature > 0.0)) fail("initial.temperature", "must be positive");
  if (!(initial.width > 0.0)) fail("initial.width", "must be positive");
  if (!(initial.core_radius > 0.0)) fail("initial.core_radius", "must be positive");
  if (initial.kind == "tabulated" && initial.path.empty()) fail("initial.path", "tabulated data needs a path");
  if (initial.mollifier_width && !(*initial.mollifier_width > 0.0))
    fail("initial.mollifier_width", "must be positive");
  try {
    solver.validate();
  } catch (const std::exception& e) {
    fail("solver", e.what());
  }
  if (output.cadence < 1) fail("output.cadence", "must be at least 1");
  if (output.checkpoint_every < 0) fail("output.checkpoint_every", "must be non-negative");
  for (double l : output.tail_lambdas)
    if (!(l > 0.0)) fail("output.tail_lambdas", "thresholds must be positive");
  if (!(output.core_radius > 0.0)) fail("output.core_radius", "must be positive");
  for (double j : study.j_levels)
    if (!(j > 0.0)) fail("study.j_levels", "levels must be positive");
  for (double t : study.sample_times)
    if (!(t >= 0.0)) fail("study.sample_times", "times must be non-negative");
  for (double e : study.epsilons)
    if (!(e >= 0.0)) fail("study.epsilons", "must be non-negative");
  for (double a : study.alphas)
    if (!(a > 0.0 && a <= 1.0)) fail("study.alphas", "must lie in (0, 1]");
  if (workers < 1) fail("workers", "must be at least 1");
}

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) throw ConfigError("", 0, "config must be a mapping of sections");

  RunConfig cfg;
  Lines lines;
  Section top(root, "config",
              {"schema_version", "scenario", "grid", "kernel", "statistics", "initial", "solver", "output", "study",
               "workers", "seed"});
  if (!root["schema_version"]) throw ConfigError("schema_version", 0, "missing schema_version");
  top.get("schema_version", cfg.schema_version);
  top.get("scenario", cfg.scenario);
  top.get("workers", cfg.workers);
  top.get("seed", cfg.seed);
  for (const char* k : {"schema_version", "workers"}) lines.at[k] = top.line(k);

  {
    Section s(required(root, "grid"), "grid", {"k", "nx", "j_level", "nv", "sphere", "v_extent"});
    s.get("k", cfg.grid.k);
    s.get("nx", cfg.grid.nx);
    s.get("j_level", cfg.grid.j_level);
    s.get("nv", cfg.grid.nv);
    s.get("sphere", cfg.grid.sphere);
    s.get("v_extent", cfg.grid.v_extent);
    for (const char* k : {"k", "nx", "j_level", "nv", "sphere", "v_extent"}) lines.at[std::string("grid.") + k] = s.line(k);
  }
  {
    Section s(required(root, "kernel"), "kernel", {"model", "B0", "c", "eta", "gamma", "gamma_prime"});
    s.get("model", cfg.kernel.model);
    s.get("B0", cfg.kernel.B0);
    s.get("c", cfg.kernel.c);
    s.get("eta", cfg.kernel.eta);
    s.get("gamma", cfg.kernel.gamma);
    s.get("gamma_prime", cfg.kernel.gamma_prime);
    lines.at["kernel"] = line_of(root["kernel"]);
  }
  {
    Section s(required(root, "statistics"), "statistics", {"alpha"});
    s.get("alpha", cfg.alpha);
    lines.at["statistics.alpha"] = s.line("alpha");
  }
  {
    Section s(required(root, "initial"), "initial",
              {"kind", "mu", "temperature", "bulk_velocity", "amplitude", "center", "width", "core_radius", "path",
               "mollifier_width"});
    auto& in = cfg.initial;
    s.get("kind", in.kind);
    s.get("mu", in.mu);
    s.get("temperature", in.temperature);
    s.get("bulk_velocity", in.bulk_velocity);
    s.get("amplitude", in.amplitude);
    s.get("center", in.center);
    s.get("width", in.width);
    s.get("core_radius", in.core_radius);
    s.get("path", in.path);
    s.get("mollifier_width", in.mollifier_width);
    for (const char* k : {"kind", "temperature", "width", "core_radius", "path", "mollifier_width"})
      lines.at[std::string("initial.") + k] = s.line(k);
  }
  {
    Section s(required(root, "solver"), "solver",
              {"dt", "t_end", "picard_tol", "picard_max", "splitting", "homogeneous"});
    s.get("dt", cfg.solver.dt);
    s.get("t_end", cfg.solver.t_end);
    s.get("picard_tol", cfg.solver.picard_tol);
    s.get("picard_max", cfg.solver.picard_max);
    std::string split = cfg.solver.splitting == Splitting::strang ? "strang" : "lie";
    s.get("splitting", split);
    if (split == "strang") {
      cfg.solver.splitting = Splitting::strang;
    } else if (split == "lie") {
      cfg.solver.splitting = Splitting::lie;
    } else {
      throw ConfigError("solver.splitting", s.line("splitting"), "expected 'strang' or 'lie'");
    }
    s.get("homogeneous", cfg.solver.homogeneous);
    lines.at["solver"] = line_of(root["solver"]);
  }
  if (root["output"]) {
    Section s(root["output"], "output", {"directory", "cadence", "checkpoint_every", "tail_lambdas", "core_radius"});
    s.get("directory", cfg.output.directory);
    s.get("cadence", cfg.output.cadence);
    s.get("checkpoint_every", cfg.output.checkpoint_every);
    s.get("tail_lambdas", cfg.output.tail_lambdas);
    s.get("core_radius", cfg.output.core_radius);
    for (const char* k : {"cadence", "checkpoint_every", "tail_lambdas", "core_radius"})
      lines.at[std::string("output.") + k] = s.line(k);
  }
  if (root["study"]) {
    Section s(root["study"], "study", {"j_levels", "sample_times", "epsilons", "alphas"});
    s.get("j_levels", cfg.study.j_levels);
    s.get("sample_times", cfg.study.sample_times);
    s.get("epsilons", cfg.study.epsilons);
    s.get("alphas", cfg.study.alphas);
    for (const char* k : {"j_levels", "sample_times", "epsilons", "alphas"})
      lines.at[std::string("study.") + k] = s.line(k);
  }

  g_lines = &lines;
  try {
    cfg.validate();
  } catch (...) {
    g_lines = nullptr;
    throw;
  }
  g_lines = nullptr;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::string serialize_config(const RunConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "schema_version" << YAML::Value << cfg.schema_version;
  out << YAML::Key << "scenario" << YAML::Value << cfg.scenario;
  out << YAML::Key << "workers" << YAML::Value << cfg.workers;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;

  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "k" << YAML::Value << cfg.grid.k;
  out << YAML::Key << "nx" << YAML::Value << cfg.grid.nx;
  out << YAML::Key << "j_level" << YAML::Value << cfg.grid.j_level;
  out << YAML::Key << "nv" << YAML::Value << cfg.grid.nv;
  out << YAML::Key << "sphere" << YAML::Value << cfg.grid.sphere;
  if (cfg.grid.v_extent) out << YAML::Key << "v_extent" << YAML::Value << *cfg.grid.v_extent;
  out << YAML::EndMap;

  out << YAML::Key << "kernel" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "model" << YAML::Value << cfg.kernel.model;
  out << YAML::Key << "B0" << YAML::Value << cfg.kernel.B0;
  out << YAML::Key << "c" << YAML::Value << cfg.kernel.c;
  out << YAML::Key << "eta" << YAML::Value << cfg.kernel.eta;
  out << YAML::Key << "gamma" << YAML::Value << cfg.kernel.gamma;
  out << YAML::Key << "gamma_prime" << YAML::Value << cfg.kernel.gamma_prime;
  out << YAML::EndMap;

  out << YAML::Key << "statistics" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "alpha" << YAML::Value << cfg.alpha;
  out << YAML::EndMap;

  const auto& in = cfg.initial;
  out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << in.kind;
  out << YAML::Key << "mu" << YAML::Value << in.mu;
  out << YAML::Key << "temperature" << YAML::Value << in.temperature;
  out << YAML::Key << "bulk_velocity" << YAML::Value << YAML::Flow
      << std::vector<double>{in.bulk_velocity[0], in.bulk_velocity[1], in.bulk_velocity[2]};
  out << YAML::Key << "amplitude" << YAML::Value << in.amplitude;
  out << YAML::Key << "center" << YAML::Value << in.center;
  out << YAML::Key << "width" << YAML::Value << in.width;
  out << YAML::Key << "core_radius" << YAML::Value << in.core_radius;
  if (!in.path.empty()) out << YAML::Key << "path" << YAML::Value << in.path;
  if (in.mollifier_width) out << YAML::Key << "mollifier_width" << YAML::Value << *in.mollifier_width;
  out << YAML::EndMap;

  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dt" << YAML::Value << cfg.solver.dt;
  out << YAML::Key << "t_end" << YAML::Value << cfg.solver.t_end;
  out << YAML::Key << "picard_tol" << YAML::Value << cfg.solver.picard_tol;
  out << YAML::Key << "picard_max" << YAML::Value << cfg.solver.picard_max;
  out << YAML::Key << "splitting" << YAML::Value << (cfg.solver.splitting == Splitting::strang ? "strang" : "lie");
  out << YAML::Key << "homogeneous" << YAML::Value << cfg.solver.homogeneous;
  out << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "directory" << YAML::Value << cfg.output.directory;
  out << YAML::Key << "cadence" << YAML::Value << cfg.output.cadence;
  out << YAML::Key << "checkpoint_every" << YAML::Value << cfg.output.checkpoint_every;
  out << YAML::Key << "tail_lambdas" << YAML::Value << YAML::Flow << cfg.output.tail_lambdas;
  out << YAML::Key << "core_radius" << YAML::Value << cfg.output.core_radius;
  out << YAML::EndMap;

  out << YAML::Key << "study" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "j_levels" << YAML::Value << YAML::Flow << cfg.study.j_levels;
  out << YAML::Key << "sample_times" << YAML::Value << YAML::Flow << cfg.study.sample_times;
  out << YAML::Key << "epsilons" << YAML::Value << YAML::Flow << cfg.study.epsilons;
  out << YAML::Key << "alphas" << YAML::Value << YAML::Flow << cfg.study.alphas;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

RunConfig standard_config() {
  RunConfig cfg;
  cfg.grid.v_extent = 6.0;
  return cfg;
}

std::shared_ptr<const PhaseGrid> make_grid(const RunConfig& cfg) {
  return std::make_shared<const PhaseGrid>(
      build_grid(cfg.grid.k, cfg.grid.nx, cfg.grid.j_level, cfg.grid.nv, cfg.grid.sphere, cfg.grid.v_extent));
}

KernelSpec make_kernel(const KernelConfig& kc) {
  if (kc.model == "band") return KernelSpec::band(kc.B0, kc.gamma, kc.gamma_prime);
  if (kc.model == "soft") return KernelSpec::soft(kc.c, kc.eta, kc.gamma, kc.gamma_prime);
  if (kc.model == "zero") return KernelSpec::zero();
  throw std::invalid_argument("unknown kernel model '" + kc.model + "' (band, soft or zero)");
}

StatisticsParam make_statistics(const RunConfig& cfg) { return StatisticsParam{cfg.alpha, cfg.grid.j_level}; }

InitialData make_initial_data(const RunConfig& cfg) {
  const auto s = make_statistics(cfg);
  const auto& in = cfg.initial;
  EquilibriumSpec e{in.mu, in.temperature, in.bulk_velocity};
  InitialData d;
  if (in.kind == "equilibrium") {
    d = equilibrium_data(s, e, cfg.grid.j_level);
  } else if (in.kind == "equilibrium-with-bump") {
    d = equilibrium_bump_data(s, e, cfg.grid.j_level, cfg.grid.k, in.amplitude, in.center, in.width);
  } else if (in.kind == "near-saturation") {
    d = near_saturation_data(cfg.alpha, cfg.grid.j_level, in.core_radius);
  } else if (in.kind == "tabulated") {
    const auto ck = read_checkpoint(in.path);
    const auto table_grid = std::make_shared<const PhaseGrid>(grid_from_header(ck.grid_header));
    const auto field = restore_field(ck, table_grid);
    if (std::abs(field.alpha() - cfg.alpha) > 0.0)
      throw ConfigError("initial.path", 0, "tabulated data has a different alpha");
    d = tabulated_data(field, cfg.grid.j_level);
  } else {
    throw ConfigError("initial.kind", 0, "unknown initial datum '" + in.kind + "'");
  }
  if (in.mollifier_width) d.mollifier_width = *in.mollifier_width;
  return d;
}

}  // namespace haldane
