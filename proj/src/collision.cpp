#include "haldane/collision.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace haldane {

namespace {

using Vector5 = Eigen::Matrix<double, 5, 1>;
using Matrix5 = Eigen::Matrix<double, 5, 5>;

// Collision invariants scaled by the ball radius for conditioning.
Vector5 invariants(const Vec3& v, double inv_r) {
  Vector5 phi;
  phi << 1.0, v[0] * inv_r, v[1] * inv_r, v[2] * inv_r, norm2(v) * inv_r * inv_r;
  return phi;
}

}  // namespace

std::pair<Vec3, Vec3> collision_geometry(const Vec3& v, const Vec3& v_star, const Vec3& n) {
  if (std::abs(norm2(n) - 1.0) > 1e-12) throw std::invalid_argument("collision direction n must be a unit vector");
  const double gn = (v[0] - v_star[0]) * n[0] + (v[1] - v_star[1]) * n[1] + (v[2] - v_star[2]) * n[2];
  return {Vec3{v[0] - gn * n[0], v[1] - gn * n[1], v[2] - gn * n[2]},
          Vec3{v_star[0] + gn * n[0], v_star[1] + gn * n[1], v_star[2] + gn * n[2]}};
}

// ---------------------------------------------------------------------------
// PostCollisionSampler

PostCollisionSampler::PostCollisionSampler(const PhaseGrid& grid, const OccupationTable& table)
    : grid_(&grid), table_(&table), stride_(grid.nv() + 2) {
  residual_.assign(static_cast<std::size_t>(stride_) * stride_ * stride_, 0.0);
}

void PostCollisionSampler::load(std::span<const double> y) {
  const auto& grid = *grid_;
  const auto& stats = table_->statistics();
  const double top = stats.ceiling();
  const std::size_t n = grid.node_count();
  const double radius = grid.ball_radius();
  const double inv_r = 1.0 / radius;

  std::vector<double> h(n, 0.0);
  Matrix5 normal = Matrix5::Zero();
  Vector5 rhs = Vector5::Zero();
  std::size_t used = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double yk = y[k];
    if (!(yk > 0.0 && yk < top)) continue;
    const double F = filling(stats, yk);
    if (!(F > 0.0)) continue;
    h[k] = std::log(yk / F);
    const double w = yk * (top - yk);
    const Vector5 phi = invariants(grid.velocity(k), inv_r);
    normal.noalias() += w * phi * phi.transpose();
    rhs.noalias() += (w * h[k]) * phi;
    ++used;
  }

  fit_.fill(0.0);
  if (used >= 5) {
    Eigen::LDLT<Matrix5> ldlt(normal);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-13) {
      const Vector5 coef = ldlt.solve(rhs);
      std::array<double, 5> fit{coef[0], coef[1] * inv_r, coef[2] * inv_r, coef[3] * inv_r,
                                coef[4] * inv_r * inv_r};
      // Post-collision speeds stay below min(j, sqrt(2) * radius).
      const double reach = std::min(grid.j_level(), std::sqrt(2.0) * radius);
      const double bound = std::abs(fit[0]) +
                           std::sqrt(fit[1] * fit[1] + fit[2] * fit[2] + fit[3] * fit[3]) * reach +
                           std::abs(fit[4]) * reach * reach;
      if (std::isfinite(bound) && bound <= 300.0) fit_ = fit;
    }
  }

  const double dv = grid.dv();
  const double origin = -dv * (0.5 * grid.nv() + 0.5);  // velocity of padded index 0
  for (int i = 0; i < stride_; ++i)
    for (int j = 0; j < stride_; ++j)
      for (int l = 0; l < stride_; ++l) {
        const Vec3 v{origin + dv * i, origin + dv * j, origin + dv * l};
        residual_[(static_cast<std::size_t>(i) * stride_ + j) * stride_ + l] = -table_->at_log_ratio(quadratic(v)).y;
      }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& idx = grid.lattice_index(k);
    residual_[(static_cast<std::size_t>(idx[0] + 1) * stride_ + (idx[1] + 1)) * stride_ + (idx[2] + 1)] += y[k];
  }
}

double PostCollisionSampler::residual(int i, int j, int l) const {
  if (i < -1 || j < -1 || l < -1 || i > grid_->nv() || j > grid_->nv() || l > grid_->nv()) {
    const double dv = grid_->dv();
    const double c = 0.5 * grid_->nv() - 0.5;
    return -table_->at_log_ratio(quadratic(Vec3{dv * (i - c), dv * (j - c), dv * (l - c)})).y;
  }
  return residual_[(static_cast<std::size_t>(i + 1) * stride_ + (j + 1)) * stride_ + (l + 1)];
}

OccupationTable::Sample PostCollisionSampler::sample(const Vec3& v) const {
  const double inv_dv = 1.0 / grid_->dv();
  const double shift = 0.5 * grid_->nv() + 0.5;  // padded index of coordinate 0 is nv/2 + 1/2
  int i0[3];
  double t[3];
  bool inside = true;
  for (int a = 0; a < 3; ++a) {
    const double s = v[a] * inv_dv + shift;
    // Positions within rounding of a lattice plane are put on it, so that a
    // near-saturated neighbour does not leak in through a 1e-16 weight.
    const double fl = std::floor(s + 1e-12);
    i0[a] = static_cast<int>(fl);
    t[a] = std::max(s - fl, 0.0);
    if (t[a] < 1e-12) t[a] = 0.0;
    inside = inside && i0[a] >= 0 && i0[a] + 1 < stride_;
  }

  double rho = 0.0;
  if (inside) {
    const std::size_t s1 = stride_;
    const std::size_t s2 = s1 * s1;
    const double* p = &residual_[static_cast<std::size_t>(i0[0]) * s2 + i0[1] * s1 + i0[2]];
    const double c00 = p[0] + t[2] * (p[1] - p[0]);
    const double c01 = p[s1] + t[2] * (p[s1 + 1] - p[s1]);
    const double c10 = p[s2] + t[2] * (p[s2 + 1] - p[s2]);
    const double c11 = p[s2 + s1] + t[2] * (p[s2 + s1 + 1] - p[s2 + s1]);
    const double c0 = c00 + t[1] * (c01 - c00);
    const double c1 = c10 + t[1] * (c11 - c10);
    rho = c0 + t[0] * (c1 - c0);
  } else {
    for (int corner = 0; corner < 8; ++corner) {
      double w = 1.0;
      int idx[3];
      for (int a = 0; a < 3; ++a) {
        const int bit = (corner >> (2 - a)) & 1;
        idx[a] = i0[a] + bit - 1;
        w *= bit ? t[a] : 1.0 - t[a];
      }
      if (w != 0.0) rho += w * residual(idx[0], idx[1], idx[2]);
    }
  }

  const auto m = table_->at_log_ratio(quadratic(v));
  if (rho == 0.0) return m;
  const double top = table_->statistics().ceiling();
  const double y = std::clamp(m.y + rho, 0.0, top);
  if (y == 0.0) return table_->empty();
  if (y == top) return table_->saturated();
  return {y, filling(table_->statistics(), y)};
}

// ---------------------------------------------------------------------------
// CollisionOperator

CollisionOperator::CollisionOperator(std::shared_ptr<const PhaseGrid> grid, KernelSpec kernel,
                                     StatisticsParam stats, Path path)
    : grid_(std::move(grid)), kernel_(std::move(kernel)), stats_(stats), table_(stats) {
  if (!grid_) throw std::invalid_argument("collision operator needs a grid");

  const auto& rule = grid_->sphere();
  if (rule.antipodal()) {
    std::vector<bool> used(rule.nodes.size(), false);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      if (used[i]) continue;
      used[i] = true;
      const auto& a = rule.nodes[i];
      for (std::size_t m = i + 1; m < rule.nodes.size(); ++m) {
        const auto& b = rule.nodes[m];
        if (!used[m] && std::abs(a.n[0] + b.n[0]) < 1e-14 && std::abs(a.n[1] + b.n[1]) < 1e-14 &&
            std::abs(a.n[2] + b.n[2]) < 1e-14) {
          used[m] = true;
          break;
        }
      }
      directions_.push_back({a.n, a.weight, true});
    }
  } else {
    for (const auto& node : rule.nodes) directions_.push_back({node.n, node.weight, false});
  }

  if (kernel_.model() == KernelSpec::Model::zero) return;
  const double w = grid_->velocity_weight();
  const double dv = grid_->dv();
  const double j = grid_->j_level();
  const int nv = grid_->nv();
  const std::size_t max_d2 = 3 * static_cast<std::size_t>(nv) * nv;
  radial_.assign(max_d2 + 1, 0.0);
  inv_dist_.assign(max_d2 + 1, 0.0);
  for (std::size_t d2 = 1; d2 <= max_d2; ++d2) {
    const double u = dv * std::sqrt(static_cast<double>(d2));
    inv_dist_[d2] = 1.0 / std::sqrt(static_cast<double>(d2));
    if (u < kernel_.gamma()) continue;
    radial_[d2] = (kernel_.separable() ? kernel_.radial(u) : 1.0) * w;
  }

  const auto& vel = grid_->velocities();
  for (std::uint32_t a = 0; a < vel.size(); ++a)
    for (std::uint32_t b = a + 1; b < vel.size(); ++b) {
      if (!chi_j(vel[a], vel[b], j)) continue;
      const auto& ia = grid_->lattice_index(a);
      const auto& ib = grid_->lattice_index(b);
      const int d0 = ia[0] - ib[0], d1 = ia[1] - ib[1], d2 = ia[2] - ib[2];
      const auto dist2 = static_cast<std::uint32_t>(d0 * d0 + d1 * d1 + d2 * d2);
      if (radial_[dist2] == 0.0) continue;
      pairs_.push_back({a, b, dist2});
    }

  if (path == Path::automatic && kernel_.separable()) setup_aligned();
}

namespace {

std::ptrdiff_t floor_div(std::ptrdiff_t a, std::ptrdiff_t b) {
  std::ptrdiff_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Integer vector m with n = m / |m| and |m|^2 <= 3, if there is one.
std::optional<std::array<int, 3>> integer_direction(const Vec3& n) {
  for (int K = 1; K <= 3; ++K) {
    const double scale = std::sqrt(static_cast<double>(K));
    std::array<int, 3> m{};
    bool ok = true;
    int len = 0;
    for (int c = 0; c < 3; ++c) {
      const double x = n[c] * scale;
      m[c] = static_cast<int>(std::lround(x));
      ok = ok && std::abs(x - m[c]) < 1e-12;
      len += m[c] * m[c];
    }
    if (ok && len == K) return m;
  }
  return std::nullopt;
}

}  // namespace

void CollisionOperator::setup_aligned() {
  const auto& grid = *grid_;
  std::vector<AlignedDirection> dirs;
  for (const auto& d : directions_) {
    const auto m = integer_direction(d.n);
    if (!m) return;
    AlignedDirection ad;
    ad.m = *m;
    ad.K = (*m)[0] * (*m)[0] + (*m)[1] * (*m)[1] + (*m)[2] * (*m)[2];
    ad.weight = d.paired ? 2.0 * d.weight : d.weight;
    if (!d.paired) return;  // the fast loop assumes B(u, c) = B(u, -c) folding
    dirs.push_back(std::move(ad));
  }

  const int nv = grid.nv();
  const double dv = grid.dv();
  reach_ = std::min(grid.j_level(), std::sqrt(2.0) * grid.ball_radius());
  pad_ = std::max(1, static_cast<int>(std::ceil(reach_ / dv - 0.5 * nv + 0.5)) + 1);
  box_ = nv + 2 * pad_;
  const std::ptrdiff_t s1 = box_, s2 = static_cast<std::ptrdiff_t>(box_) * box_;

  node_linear_.resize(grid.node_count());
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    const auto& i = grid.lattice_index(k);
    node_linear_[k] = (i[0] + pad_) * s2 + (i[1] + pad_) * s1 + (i[2] + pad_);
  }

  auto grid_id = [&](const Vec3& o) {
    for (std::size_t g = 0; g < offsets_.size(); ++g)
      if (std::abs(offsets_[g][0] - o[0]) < 1e-12 && std::abs(offsets_[g][1] - o[1]) < 1e-12 &&
          std::abs(offsets_[g][2] - o[2]) < 1e-12)
        return static_cast<int>(g);
    offsets_.push_back(o);
    return static_cast<int>(offsets_.size() - 1);
  };
  // Lattice position x + t m with t = sign * r / K, split into floor shift and fractional offset.
  auto split = [&](const AlignedDirection& ad, int r, int sign, int& id, std::ptrdiff_t& shift) {
    Vec3 o{};
    std::array<std::ptrdiff_t, 3> sh{};
    for (int c = 0; c < 3; ++c) {
      const std::ptrdiff_t num = static_cast<std::ptrdiff_t>(sign) * r * ad.m[c];
      sh[c] = floor_div(num, ad.K);
      o[c] = static_cast<double>(num - sh[c] * ad.K) / ad.K;
    }
    id = grid_id(o);
    shift = sh[0] * s2 + sh[1] * s1 + sh[2];
  };

  grid_id(Vec3{0.0, 0.0, 0.0});
  for (auto& ad : dirs) {
    ad.proj.resize(grid.node_count());
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      const auto& i = grid.lattice_index(k);
      ad.proj[k] = i[0] * ad.m[0] + i[1] * ad.m[1] + i[2] * ad.m[2];
    }
    ad.stride_m = ad.m[0] * s2 + ad.m[1] * s1 + ad.m[2];
    ad.grid_pre.fill(0);
    ad.grid_post.fill(0);
    ad.shift_pre.fill(0);
    ad.shift_post.fill(0);
    for (int r = 0; r < ad.K; ++r) {
      split(ad, r, -1, ad.grid_pre[r], ad.shift_pre[r]);
      split(ad, r, +1, ad.grid_post[r], ad.shift_post[r]);
    }
  }

  // Every lookup of every pair must stay inside the padded box.
  const std::ptrdiff_t total = s2 * box_;
  for (const auto& ad : dirs)
    for (const auto& pair : pairs_) {
      const std::ptrdiff_t p = ad.proj[pair.a] - ad.proj[pair.b];
      const std::ptrdiff_t q = floor_div(p, ad.K);
      const auto r = static_cast<std::size_t>(p - q * ad.K);
      const std::ptrdiff_t i1 = node_linear_[pair.a] - q * ad.stride_m + ad.shift_pre[r];
      const std::ptrdiff_t i2 = node_linear_[pair.b] + q * ad.stride_m + ad.shift_post[r];
      if (i1 < 0 || i1 >= total || i2 < 0 || i2 >= total)
        throw std::logic_error("post-collision lookup outside the padded velocity box");
    }
  aligned_ = std::move(dirs);
}

void CollisionOperator::evaluate_cell(std::span<const double> y, CellResult& out, bool want_bony) const {
  const auto& grid = *grid_;
  const std::size_t n = grid.node_count();
  if (y.size() != n) throw std::invalid_argument("cell array does not match the velocity grid");
  out.gain_rate.assign(n, 0.0);
  out.loss_rate.assign(n, 0.0);
  out.bony = 0.0;
  if (pairs_.empty()) return;

  std::vector<double> F(n);
  for (std::size_t k = 0; k < n; ++k) F[k] = filling(stats_, y[k]);

  PostCollisionSampler sampler(grid, table_);
  sampler.load(y);
  if (lattice_path())
    evaluate_aligned(y, F, sampler, out, want_bony);
  else
    evaluate_generic(y, F, sampler, out, want_bony);
}

void CollisionOperator::evaluate_generic(std::span<const double> y, std::span<const double> F,
                                         const PostCollisionSampler& sampler, CellResult& out,
                                         bool want_bony) const {
  const auto& grid = *grid_;
  const auto& vel = grid.velocities();
  const bool separable = kernel_.separable();
  double* A = out.gain_rate.data();
  double* L = out.loss_rate.data();
  double bony = 0.0;

  for (const auto& pair : pairs_) {
    const Vec3& va = vel[pair.a];
    const Vec3& vb = vel[pair.b];
    const Vec3 g{va[0] - vb[0], va[1] - vb[1], va[2] - vb[2]};
    const double u = std::sqrt(norm2(g));
    const double inv_u = 1.0 / u;
    const double ya = y[pair.a], yb = y[pair.b];
    const double Fa = F[pair.a], Fb = F[pair.b];
    double gain_a = 0.0, gain_b = 0.0, loss_a = 0.0, loss_b = 0.0;

    for (const auto& dir : directions_) {
      const Vec3& nd = dir.n;
      const double gn = g[0] * nd[0] + g[1] * nd[1] + g[2] * nd[2];
      const double c = gn * inv_u;
      double fwd, bwd;
      if (separable) {
        fwd = kernel_.in_band(c) ? 1.0 : 0.0;
        bwd = kernel_.in_band(-c) ? 1.0 : 0.0;
      } else {
        fwd = kernel_(u, c);
        bwd = kernel_(u, -c);
      }
      const double w_ab = dir.weight * (dir.paired ? fwd + bwd : fwd);
      const double w_ba = dir.weight * (dir.paired ? fwd + bwd : bwd);
      if (w_ab == 0.0 && w_ba == 0.0) continue;

      const Vec3 vp{va[0] - gn * nd[0], va[1] - gn * nd[1], va[2] - gn * nd[2]};
      const Vec3 vps{vb[0] + gn * nd[0], vb[1] + gn * nd[1], vb[2] + gn * nd[2]};
      const auto sp = sampler.sample(vp);
      const auto sps = sampler.sample(vps);
      const double gprod = sp.y * sps.y;
      const double lprod = sp.F * sps.F;
      gain_a += w_ab * gprod;
      gain_b += w_ba * gprod;
      loss_a += w_ab * lprod;
      loss_b += w_ba * lprod;
      if (want_bony) bony += (w_ab + w_ba) * nd[0] * nd[0] * gn * gn * lprod * ya * yb * radial_[pair.d2];
    }
    const double r = radial_[pair.d2];
    A[pair.a] += r * gain_a * Fb;
    A[pair.b] += r * gain_b * Fa;
    L[pair.a] += r * loss_a * yb;
    L[pair.b] += r * loss_b * ya;
  }
  out.bony = bony * grid.velocity_weight();
}

void CollisionOperator::evaluate_aligned(std::span<const double> y, std::span<const double> F,
                                         const PostCollisionSampler& sampler, CellResult& out,
                                         bool want_bony) const {
  const auto& grid = *grid_;
  const int nv = grid.nv();
  const double dv = grid.dv();
  const std::size_t per_grid = static_cast<std::size_t>(box_) * box_ * box_;

  // Sample every shifted copy of the lattice once.
  std::vector<OccupationTable::Sample> samples(offsets_.size() * per_grid, table_.empty());
  const double limit = (reach_ + 2.0 * dv) * (reach_ + 2.0 * dv);
  for (std::size_t g = 0; g < offsets_.size(); ++g) {
    auto* dst = samples.data() + g * per_grid;
    for (int i = 0; i < box_; ++i)
      for (int j = 0; j < box_; ++j)
        for (int l = 0; l < box_; ++l) {
          const Vec3 v{dv * (i - pad_ + offsets_[g][0] - 0.5 * nv + 0.5),
                       dv * (j - pad_ + offsets_[g][1] - 0.5 * nv + 0.5),
                       dv * (l - pad_ + offsets_[g][2] - 0.5 * nv + 0.5)};
          if (norm2(v) > limit) continue;
          dst[(static_cast<std::size_t>(i) * box_ + j) * box_ + l] = sampler.sample(v);
        }
  }

  const double gp = kernel_.gamma_prime();
  double* A = out.gain_rate.data();
  double* L = out.loss_rate.data();
  double bony = 0.0;
  const auto* lin = node_linear_.data();
  const double* radial = radial_.data();
  const double* inv_dist = inv_dist_.data();

  for (const auto& ad : aligned_) {
    const int* proj = ad.proj.data();
    const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(ad.K));
    const double bony_scale = ad.m[0] * ad.m[0] * dv * dv / static_cast<double>(ad.K * ad.K);
    const OccupationTable::Sample* pre[3];
    const OccupationTable::Sample* post[3];
    for (int r = 0; r < 3; ++r) {
      pre[r] = samples.data() + ad.grid_pre[r] * per_grid + ad.shift_pre[r];
      post[r] = samples.data() + ad.grid_post[r] * per_grid + ad.shift_post[r];
    }
    for (const auto& pair : pairs_) {
      const int p = proj[pair.a] - proj[pair.b];
      const double c = std::abs(p) * inv_sqrt_k * inv_dist[pair.d2];
      if (!(c >= gp && 1.0 - c >= gp)) continue;
      int q = p, r = 0;
      if (ad.K > 1) {
        q = static_cast<int>(floor_div(p, ad.K));
        r = p - q * ad.K;
      }
      const std::ptrdiff_t step = q * ad.stride_m;
      const auto& sp = pre[r][lin[pair.a] - step];
      const auto& sps = post[r][lin[pair.b] + step];
      const double W = ad.weight * radial[pair.d2];
      const double gprod = W * sp.y * sps.y;
      const double lprod = W * sp.F * sps.F;
      A[pair.a] += gprod * F[pair.b];
      A[pair.b] += gprod * F[pair.a];
      L[pair.a] += lprod * y[pair.b];
      L[pair.b] += lprod * y[pair.a];
      if (want_bony) bony += 2.0 * bony_scale * static_cast<double>(p) * p * lprod * y[pair.a] * y[pair.b];
    }
  }
  out.bony = bony * grid.velocity_weight();
}

// ---------------------------------------------------------------------------

std::vector<double> gain(const DistributionField& f, const KernelSpec& ks, const StatisticsParam& s,
                         std::size_t cell) {
  CollisionOperator op(f.grid_ptr(), ks, s);
  CollisionOperator::CellResult res;
  const auto y = f.cell(cell);
  op.evaluate_cell(y, res);
  std::vector<double> out(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) out[k] = filling(s, y[k]) * res.gain_rate[k];
  return out;
}

CollisionRates loss_rates(const DistributionField& f, const KernelSpec& ks, const StatisticsParam& s,
                          std::size_t cell) {
  CollisionOperator op(f.grid_ptr(), ks, s);
  CollisionOperator::CellResult res;
  op.evaluate_cell(f.cell(cell), res);
  return {std::move(res.gain_rate), std::move(res.loss_rate)};
}

double conservation_defect(std::span<const double> delta, const PhaseGrid& grid) {
  std::array<double, 5> num{}, den{};
  for (std::size_t k = 0; k < delta.size(); ++k) {
    const Vec3& v = grid.velocity(k);
    const double phi[5] = {1.0, v[0], v[1], v[2], norm2(v)};
    for (int m = 0; m < 5; ++m) {
      num[m] += phi[m] * delta[k];
      den[m] += std::abs(phi[m] * delta[k]);
    }
  }
  double a = 0.0, b = 0.0;
  for (int m = 0; m < 5; ++m) {
    a += num[m] * num[m];
    b += den[m] * den[m];
  }
  return b > 0.0 ? std::sqrt(a / b) : 0.0;
}

ProjectionReport project_conservative(std::span<double> delta, std::span<const double> mu,
                                      const PhaseGrid& grid) {
  ProjectionReport report;
  report.defect_before = conservation_defect(delta, grid);
  const double inv_r = 1.0 / grid.ball_radius();
  Matrix5 normal = Matrix5::Zero();
  Vector5 rhs = Vector5::Zero();
  for (std::size_t k = 0; k < delta.size(); ++k) {
    const Vector5 phi = invariants(grid.velocity(k), inv_r);
    rhs.noalias() += delta[k] * phi;
    if (mu[k] > 0.0) normal.noalias() += mu[k] * phi * phi.transpose();
  }
  if (rhs.isZero(0.0)) {
    report.defect_after = report.defect_before;
    return report;
  }
  const Vector5 lambda = normal.completeOrthogonalDecomposition().solve(rhs);
  for (std::size_t k = 0; k < delta.size(); ++k) {
    if (!(mu[k] > 0.0)) continue;
    delta[k] -= mu[k] * invariants(grid.velocity(k), inv_r).dot(lambda);
  }
  report.defect_after = conservation_defect(delta, grid);
  return report;
}

ProjectionReport project_conservative_bounded(std::span<double> delta, std::span<const double> y0, double top,
                                              const PhaseGrid& grid) {
  const std::size_t n = delta.size();
  std::vector<double> base(delta.begin(), delta.end()), mu(n), trial(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double y1 = y0[k] + delta[k];
    mu[k] = std::max(y0[k] * (top - y0[k]), y1 * (top - y1));
  }
  ProjectionReport report;
  report.defect_before = conservation_defect(delta, grid);
  for (std::size_t pass = 0; pass <= n; ++pass) {
    std::copy(base.begin(), base.end(), trial.begin());
    const auto r = project_conservative(trial, mu, grid);
    report.defect_after = r.defect_after;
    std::size_t crossed = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!(mu[k] > 0.0)) continue;
      const double y = y0[k] + trial[k];
      if (y < 0.0 || y > top) {
        base[k] = (y < 0.0 ? 0.0 : top) - y0[k];
        mu[k] = 0.0;
        ++crossed;
      }
    }
    report.pinned += crossed;
    if (crossed == 0) break;
  }
  std::copy(trial.begin(), trial.end(), delta.begin());
  return report;
}

CollisionOperatorResult collision_operator(const DistributionField& f, const KernelSpec& ks,
                                           const StatisticsParam& s) {
  CollisionOperator op(f.grid_ptr(), ks, s);
  CollisionOperatorResult result;
  result.raw.assign(f.data().size(), 0.0);
  result.corrected.assign(f.data().size(), 0.0);
  const std::size_t n = f.nodes();
  const double top = s.ceiling();
  CollisionOperator::CellResult res;
  std::vector<double> mu(n);
  for (std::size_t c = 0; c < f.cells(); ++c) {
    const auto y = f.cell(c);
    op.evaluate_cell(y, res);
    std::span<double> raw(result.raw.data() + c * n, n);
    std::span<double> corr(result.corrected.data() + c * n, n);
    for (std::size_t k = 0; k < n; ++k) {
      raw[k] = filling(s, y[k]) * res.gain_rate[k] - y[k] * res.loss_rate[k];
      corr[k] = raw[k];
      mu[k] = y[k] * (top - y[k]);
    }
    const auto report = project_conservative(corr, mu, f.grid());
    result.max_defect = std::max(result.max_defect, report.defect_before);
  }
  return result;
}

}  // namespace haldane
