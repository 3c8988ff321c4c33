#include "haldane/statistics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace haldane {

namespace {

constexpr double kDomainSlack = 1e-12;
constexpr double kTiny = 1e-300;

double checked_occupation(const StatisticsParam& s, double y) {
  const double top = s.ceiling();
  const double slack = kDomainSlack * std::max(1.0, top);
  if (!(y >= -slack && y <= top + slack)) {
    std::ostringstream os;
    os << "occupation " << y << " outside [0, " << top << "]";
    throw std::domain_error(os.str());
  }
  return std::clamp(y, 0.0, top);
}

// 1 - alpha y, exactly 0 at (and beyond) the ceiling.
double vacancy(const StatisticsParam& s, double y) {
  if (y >= s.ceiling()) return 0.0;
  return std::max(0.0, 1.0 - s.alpha * y);
}

double f_alpha(const StatisticsParam& s, double y) {
  if (y <= 0.0) return 1.0;
  const double a = vacancy(s, y);
  if (a < kTiny) return 0.0;
  if (s.alpha == 1.0) return a;
  const double b = 1.0 - s.alpha;
  return std::exp(s.alpha * std::log(a) + b * std::log1p(b * y));
}

double f_regularized(const StatisticsParam& s, double y, double j) {
  const double a = vacancy(s, y);
  if (a < kTiny) return 0.0;
  if (s.alpha == 1.0) return a;
  const double b = 1.0 - s.alpha;
  return a * std::exp(b * (std::log1p(b * y) - std::log(1.0 / j + a)));
}

}  // namespace

void StatisticsParam::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1]; the boson limit alpha = 0 is not supported");
  if (j_level && !(*j_level >= 1.0)) throw std::invalid_argument("regularisation level j must be >= 1");
}

double filling_factor(const StatisticsParam& s, double y) {
  return f_alpha(s, checked_occupation(s, y));
}

double filling_factor_regularized(const StatisticsParam& s, double y) {
  if (!s.j_level) throw std::invalid_argument("regularised filling factor needs a j level");
  return f_regularized(s, checked_occupation(s, y), *s.j_level);
}

double filling(const StatisticsParam& s, double y) {
  const double c = checked_occupation(s, y);
  return s.j_level ? f_regularized(s, c, *s.j_level) : f_alpha(s, c);
}

double filling_log_derivative(const StatisticsParam& s, double y) {
  const double a = s.alpha;
  const double b = 1.0 - a;
  const double vac = 1.0 - a * y;
  if (s.j_level) return -a / vac + a * b / (1.0 / *s.j_level + vac) + b * b / (1.0 + b * y);
  return -a * a / vac + b * b / (1.0 + b * y);
}

double occupation_ratio(const StatisticsParam& s, double y) {
  const double c = checked_occupation(s, y);
  if (!(c > 0.0 && c < s.ceiling())) throw std::domain_error("occupation ratio needs 0 < y < 1/alpha");
  return c / filling(s, c);
}

double occupation_from_log_ratio(const StatisticsParam& s, double log_ratio) {
  if (std::isnan(log_ratio)) throw std::domain_error("log ratio is NaN");
  if (log_ratio == -std::numeric_limits<double>::infinity()) return 0.0;

  auto phi = [&](double y) { return std::log(y) - std::log(filling(s, y)) - log_ratio; };
  const double top = s.ceiling() - 1e-15;
  // Beyond the bracket the root is within 1e-15 of the ceiling.
  if (!(phi(top) > 0.0)) return s.ceiling();

  constexpr int kMaxSteps = 200;
  int steps = 0;
  double lo = 0.0;
  double hi = top;
  while (hi - lo > 1e-8 && steps < kMaxSteps) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < 0.0 ? lo : hi) = mid;
    ++steps;
  }

  // Newton in u = log y; d phi / du = 1 - y (log F)' >= 1 keeps the step well scaled.
  double y = lo > 0.0 ? 0.5 * (lo + hi) : hi;
  for (; steps < kMaxSteps; ++steps) {
    const double r = phi(y);
    if (std::abs(r) <= 1e-12) return y;
    (r < 0.0 ? lo : hi) = y;
    const double slope = 1.0 - y * filling_log_derivative(s, y);
    double next = y * std::exp(-r / slope);
    if (!(next > lo && next < hi)) next = lo > 0.0 ? 0.5 * (lo + hi) : 0.5 * hi;
    if (next == y) return y;
    y = next;
  }
  std::ostringstream os;
  os << "occupation root-finder did not converge for log ratio " << log_ratio;
  throw std::runtime_error(os.str());
}

void EquilibriumSpec::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("equilibrium temperature must be positive");
}

double EquilibriumSpec::log_ratio(const Vec3& v) const {
  const Vec3 d{v[0] - bulk_velocity[0], v[1] - bulk_velocity[1], v[2] - bulk_velocity[2]};
  return (mu - norm2(d)) / temperature;
}

DistributionField equilibrium_field(const StatisticsParam& s, const EquilibriumSpec& e,
                                    std::shared_ptr<const PhaseGrid> grid) {
  s.validate();
  e.validate();
  DistributionField field(grid, s.alpha);
  std::vector<double> profile(grid->node_count());
  for (std::size_t n = 0; n < profile.size(); ++n)
    profile[n] = occupation_from_log_ratio(s, e.log_ratio(grid->velocity(n)));
  for (std::size_t c = 0; c < field.cells(); ++c) std::copy(profile.begin(), profile.end(), field.cell(c).begin());
  return field;
}

OccupationTable::OccupationTable(const StatisticsParam& s) : stats_(s) {
  s.validate();
  ceiling_ = s.ceiling();
  f_at_zero_ = filling(s, 0.0);
  dlogf_at_zero_ = filling_log_derivative(s, 0.0);
  fermion_ = s.alpha == 1.0;
  h_saturation_ = std::log(ceiling_ - 1e-15) - std::log(filling(s, ceiling_ - 1e-15));
  if (fermion_) return;
  // F_j vanishes linearly at the ceiling, so the reachable h range can end below 40.
  h_max_ = std::min(h_max_, std::floor((h_saturation_ - 1.0) * inv_step_) / inv_step_);
  const auto n = static_cast<std::size_t>((h_max_ - h_min_) * inv_step_) + 1;
  table_.resize(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = h_min_ + static_cast<double>(i) / inv_step_;
    const double y = occupation_from_log_ratio(s, h);
    const double F = filling(s, y);
    const double dlogf = filling_log_derivative(s, y);
    const double dy = 1.0 / (1.0 / y - dlogf);
    table_[4 * i + 0] = y;
    table_[4 * i + 1] = dy;
    table_[4 * i + 2] = F;
    table_[4 * i + 3] = F * dlogf * dy;
  }
}

OccupationTable::Sample OccupationTable::exact(double h) const {
  if (h < h_min_) {
    // y = e^h F(y) with y below e^-40: first order in y is exact to rounding.
    const double y = std::exp(h) * f_at_zero_;
    return {y, f_at_zero_ * (1.0 + dlogf_at_zero_ * y)};
  }
  const double y = occupation_from_log_ratio(stats_, h);
  return {y, filling(stats_, y)};
}

OccupationTable::Sample OccupationTable::at_log_ratio(double h) const {
  if (fermion_) {
    if (h > 0.0) {
      const double e = std::exp(-h);
      return {1.0 / (1.0 + e), e / (1.0 + e)};
    }
    const double e = std::exp(h);
    return {e / (1.0 + e), 1.0 / (1.0 + e)};
  }
  if (!(h >= h_min_ && h < h_max_)) {
    if (h == std::numeric_limits<double>::infinity()) return saturated();
    return exact(h);
  }
  const double s = (h - h_min_) * inv_step_;
  const auto i = static_cast<std::size_t>(s);
  const double t = s - static_cast<double>(i);
  const double step = 1.0 / inv_step_;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  const double* a = &table_[4 * i];
  const double* b = a + 4;
  const double y = h00 * a[0] + step * h10 * a[1] + h01 * b[0] + step * h11 * b[1];
  const double F = h00 * a[2] + step * h10 * a[3] + h01 * b[2] + step * h11 * b[3];
  return {y, F};
}

}  // namespace haldane
