#include "haldane/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <map>
#include <sstream>

namespace haldane {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int m = 1; m <= n; ++m) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * m - 1.0) * z * p1 - (m - 1.0) * p2) / m;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

void add_orbit_a1(std::vector<SphereNode>& out, double w) {
  for (int axis = 0; axis < 3; ++axis)
    for (double s : {1.0, -1.0}) {
      Vec3 n{0, 0, 0};
      n[axis] = s;
      out.push_back({n, w});
    }
}

void add_orbit_a2(std::vector<SphereNode>& out, double w) {
  const double a = 1.0 / std::sqrt(2.0);
  for (int zero = 0; zero < 3; ++zero)
    for (double s1 : {1.0, -1.0})
      for (double s2 : {1.0, -1.0}) {
        Vec3 n{};
        int slot = 0;
        for (int axis = 0; axis < 3; ++axis) {
          if (axis == zero) continue;
          n[axis] = (slot++ == 0 ? s1 : s2) * a;
        }
        out.push_back({n, w});
      }
}

void add_orbit_a3(std::vector<SphereNode>& out, double w) {
  const double a = 1.0 / std::sqrt(3.0);
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0})
      for (double s3 : {1.0, -1.0}) out.push_back({{s1 * a, s2 * a, s3 * a}, w});
}

// (p, q, 0) under all permutations and sign changes: 24 points.
void add_orbit_c(std::vector<SphereNode>& out, double p, double q, double w) {
  for (int zero = 0; zero < 3; ++zero) {
    const int first = zero == 0 ? 1 : 0;
    const int second = zero == 2 ? 1 : 2;
    for (int swap = 0; swap < 2; ++swap)
      for (double s1 : {1.0, -1.0})
        for (double s2 : {1.0, -1.0}) {
          Vec3 n{0, 0, 0};
          n[first] = s1 * (swap ? q : p);
          n[second] = s2 * (swap ? p : q);
          out.push_back({n, w});
        }
  }
}

SphereRule lebedev(int order) {
  SphereRule rule;
  rule.id = "lebedev:" + std::to_string(order);
  switch (order) {
    case 3:
      add_orbit_a1(rule.nodes, 1.0 / 6.0);
      break;
    case 5:
      add_orbit_a1(rule.nodes, 1.0 / 15.0);
      add_orbit_a3(rule.nodes, 3.0 / 40.0);
      break;
    case 7:
      add_orbit_a1(rule.nodes, 1.0 / 21.0);
      add_orbit_a2(rule.nodes, 4.0 / 105.0);
      add_orbit_a3(rule.nodes, 9.0 / 280.0);
      break;
    case 9: {
      const double p = std::sqrt((3.0 + std::sqrt(3.0)) / 6.0);
      const double q = std::sqrt((3.0 - std::sqrt(3.0)) / 6.0);
      add_orbit_a1(rule.nodes, 1.0 / 105.0);
      add_orbit_a3(rule.nodes, 9.0 / 280.0);
      add_orbit_c(rule.nodes, p, q, 1.0 / 35.0);
      break;
    }
    default:
      throw std::invalid_argument("unsupported lebedev order " + std::to_string(order));
  }
  for (auto& node : rule.nodes) node.weight *= kFourPi;
  return rule;
}

SphereRule product_rule(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("product sphere rule needs positive sizes");
  SphereRule rule;
  rule.id = "product:" + std::to_string(n_theta) + ":" + std::to_string(n_phi);
  std::vector<double> x, w;
  gauss_legendre(n_theta, x, w);
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double s = std::sqrt(std::max(0.0, 1.0 - x[i] * x[i]));
    for (int m = 0; m < n_phi; ++m) {
      const double phi = (m + 0.5) * dphi;
      rule.nodes.push_back({{s * std::cos(phi), s * std::sin(phi), x[i]}, w[i] * dphi});
    }
  }
  return rule;
}

int parse_int(std::string_view text, std::string_view id) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("malformed sphere rule id '" + std::string(id) + "'");
  return value;
}

}  // namespace

double SphereRule::weight_sum() const {
  double s = 0.0;
  for (const auto& node : nodes) s += node.weight;
  return s;
}

bool SphereRule::antipodal() const {
  for (const auto& a : nodes) {
    const bool found = std::any_of(nodes.begin(), nodes.end(), [&](const SphereNode& b) {
      return std::abs(a.n[0] + b.n[0]) < 1e-14 && std::abs(a.n[1] + b.n[1]) < 1e-14 &&
             std::abs(a.n[2] + b.n[2]) < 1e-14 && std::abs(a.weight - b.weight) < 1e-14 * a.weight;
    });
    if (!found) return false;
  }
  return true;
}

SphereRule make_sphere_rule(std::string_view id) {
  SphereRule rule;
  if (id.starts_with("lebedev:")) {
    rule = lebedev(parse_int(id.substr(8), id));
  } else if (id.starts_with("product:")) {
    const auto rest = id.substr(8);
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos)
      throw std::invalid_argument("malformed sphere rule id '" + std::string(id) + "'");
    rule = product_rule(parse_int(rest.substr(0, colon), id), parse_int(rest.substr(colon + 1), id));
  } else {
    throw std::invalid_argument("unknown sphere rule '" + std::string(id) + "'");
  }
  if (std::abs(rule.weight_sum() - kFourPi) > 1e-12 * kFourPi)
    throw std::invalid_argument("sphere rule '" + rule.id + "' weights do not sum to 4*pi");
  return rule;
}

PhaseGrid::PhaseGrid(int k, int nx, double j_level, int nv, SphereRule sphere,
                     std::optional<double> v_extent)
    : k_(k), nx_(nx), j_level_(j_level), nv_(nv), sphere_(std::move(sphere)) {
  if (k < 1 || k > 3) throw std::invalid_argument("spatial dimension k must be 1, 2 or 3");
  if (nx < 1) throw std::invalid_argument("nx must be positive");
  if (!(j_level > 0.0)) throw std::invalid_argument("j_level must be positive");
  if (nv < 2 || nv % 2 != 0) throw std::invalid_argument("nv must be even (v -> -v symmetry)");
  if (std::abs(sphere_.weight_sum() - kFourPi) > 1e-12 * kFourPi)
    throw std::invalid_argument("sphere rule weights do not sum to 4*pi");
  v_extent_ = v_extent.value_or(j_level);
  if (!(v_extent_ > 0.0)) throw std::invalid_argument("velocity extent must be positive");
  dv_ = 2.0 * v_extent_ / nv_;

  cell_count_ = 1;
  for (int a = 0; a < k_; ++a) cell_count_ *= static_cast<std::size_t>(nx_);

  const double radius = ball_radius();
  const double r2 = radius * radius;
  lattice_to_node_.assign(static_cast<std::size_t>(nv_) * nv_ * nv_, -1);
  // Half-integer offsets keep v -> -v exact in floating point.
  auto coord = [&](int i) { return dv_ * (i - nv_ / 2 + 0.5); };
  for (int i = 0; i < nv_; ++i)
    for (int j = 0; j < nv_; ++j)
      for (int l = 0; l < nv_; ++l) {
        const Vec3 v{coord(i), coord(j), coord(l)};
        // Relative slack absorbs rounding of lattice coordinates on the sphere |v| = j.
        if (norm2(v) > r2 * (1.0 + 1e-14)) continue;
        lattice_to_node_[(static_cast<std::size_t>(i) * nv_ + j) * nv_ + l] =
            static_cast<int>(velocities_.size());
        velocities_.push_back(v);
        lattice_.push_back({i, j, l});
      }
  if (velocities_.empty()) throw std::invalid_argument("velocity ball contains no lattice node");

  mirror_.resize(velocities_.size());
  for (std::size_t n = 0; n < velocities_.size(); ++n) {
    const auto& idx = lattice_[n];
    const int m = node_at(nv_ - 1 - idx[0], nv_ - 1 - idx[1], nv_ - 1 - idx[2]);
    if (m < 0) throw std::logic_error("velocity lattice lost v -> -v symmetry");
    mirror_[n] = static_cast<std::size_t>(m);
  }
}

double PhaseGrid::ball_radius() const { return std::min(j_level_, v_extent_); }

int PhaseGrid::node_at(int i, int j, int l) const {
  if (i < 0 || j < 0 || l < 0 || i >= nv_ || j >= nv_ || l >= nv_) return -1;
  return lattice_to_node_[(static_cast<std::size_t>(i) * nv_ + j) * nv_ + l];
}

double PhaseGrid::cell_volume() const { return std::pow(dx(), k_); }

std::array<int, 3> PhaseGrid::cell_index(std::size_t cell) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = k_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(cell % nx_);
    cell /= nx_;
  }
  return idx;
}

std::size_t PhaseGrid::cell_id(const std::array<int, 3>& idx) const {
  std::size_t id = 0;
  for (int a = 0; a < k_; ++a) {
    const int wrapped = ((idx[a] % nx_) + nx_) % nx_;
    id = id * nx_ + static_cast<std::size_t>(wrapped);
  }
  return id;
}

Vec3 PhaseGrid::cell_center(std::size_t cell) const {
  const auto idx = cell_index(cell);
  Vec3 x{0, 0, 0};
  for (int a = 0; a < k_; ++a) x[a] = (idx[a] + 0.5) * dx();
  return x;
}

std::string PhaseGrid::header() const {
  std::ostringstream os;
  os.precision(17);
  os << "k=" << k_ << " nx=" << nx_ << " nv=" << nv_ << " j_level=" << j_level_
     << " v_extent=" << v_extent_ << " sphere=" << sphere_.id;
  return os.str();
}

bool PhaseGrid::same_layout(const PhaseGrid& other) const {
  return k_ == other.k_ && nx_ == other.nx_ && nv_ == other.nv_ && j_level_ == other.j_level_ &&
         v_extent_ == other.v_extent_ && node_count() == other.node_count();
}

PhaseGrid grid_from_header(const std::string& header) {
  std::istringstream is(header);
  std::map<std::string, std::string> kv;
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("malformed grid header '" + header + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"k", "nx", "nv", "j_level", "v_extent", "sphere"})
    if (!kv.count(key)) throw std::invalid_argument("grid header lacks " + std::string(key));
  try {
    return build_grid(std::stoi(kv["k"]), std::stoi(kv["nx"]), std::stod(kv["j_level"]), std::stoi(kv["nv"]),
                      kv["sphere"], std::stod(kv["v_extent"]));
  } catch (const std::logic_error& e) {
    throw std::invalid_argument("malformed grid header '" + header + "': " + e.what());
  }
}

PhaseGrid build_grid(int k, int nx, double j_level, int nv, std::string_view sphere_rule,
                     std::optional<double> v_extent) {
  return PhaseGrid(k, nx, j_level, nv, make_sphere_rule(sphere_rule), v_extent);
}

int chi_j(const Vec3& v, const Vec3& v_star, double j_level) {
  return norm2(v) + norm2(v_star) <= j_level * j_level ? 1 : 0;
}

DistributionField::DistributionField(std::shared_ptr<const PhaseGrid> grid, double alpha, double time)
    : grid_(std::move(grid)), alpha_(alpha), time_(time) {
  if (!grid_) throw std::invalid_argument("distribution field needs a grid");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  data_.assign(grid_->cell_count() * grid_->node_count(), 0.0);
}

void DistributionField::check_invariants() const {
  const double top = ceiling();
  const std::size_t n = nodes();
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double y = data_[i];
    if (!std::isfinite(y) || y < 0.0 || y > top) {
      std::ostringstream os;
      os << "distribution value " << y << " outside [0, " << top << "] at cell " << i / n << ", node "
         << i % n;
      throw InvariantBreach(os.str(), i / n, i % n);
    }
  }
}

}  // namespace haldane
