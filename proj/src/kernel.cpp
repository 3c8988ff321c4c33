#include "haldane/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>
#include <numbers>
#include <stdexcept>

namespace haldane {

namespace {

void check_cutoffs(double gamma, double gamma_prime) {
  if (!(gamma > 0.0)) throw std::invalid_argument("kernel speed cutoff gamma must be positive");
  if (!(gamma_prime > 0.0 && gamma_prime < 0.5))
    throw std::invalid_argument("kernel angular cutoff gamma' must lie in (0, 1/2)");
}

double radical_inverse(std::size_t i, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (i > 0) {
    result += f * static_cast<double>(i % base);
    i /= base;
    f /= base;
  }
  return result;
}

}  // namespace

KernelSpec KernelSpec::band(double B0, double gamma, double gamma_prime) {
  if (!(B0 > 0.0)) throw std::invalid_argument("kernel bound B0 must be positive");
  check_cutoffs(gamma, gamma_prime);
  KernelSpec ks;
  ks.model_ = Model::band;
  ks.B0_ = B0;
  ks.gamma_ = gamma;
  ks.gamma_prime_ = gamma_prime;
  return ks;
}

KernelSpec KernelSpec::soft(double c, double eta, double gamma, double gamma_prime) {
  if (!(c > 0.0)) throw std::invalid_argument("soft kernel constant c must be positive");
  if (!(eta > 0.0)) throw std::invalid_argument("soft kernel exponent eta must be positive");
  check_cutoffs(gamma, gamma_prime);
  KernelSpec ks;
  ks.model_ = Model::soft;
  ks.B0_ = c * std::pow(gamma, -3.0 - eta);
  ks.gamma_ = gamma;
  ks.gamma_prime_ = gamma_prime;
  ks.soft_ = SoftFactor{c, eta};
  return ks;
}

KernelSpec KernelSpec::zero() {
  KernelSpec ks;
  ks.model_ = Model::zero;
  ks.B0_ = 0.0;
  ks.gamma_ = 0.1;
  ks.gamma_prime_ = 0.1;
  return ks;
}

KernelSpec KernelSpec::custom(Function B, double B0, double gamma, double gamma_prime) {
  if (!B) throw std::invalid_argument("custom kernel needs a function");
  check_cutoffs(gamma, gamma_prime);
  KernelSpec ks;
  ks.model_ = Model::custom;
  ks.custom_ = std::move(B);
  ks.B0_ = B0;
  ks.gamma_ = gamma;
  ks.gamma_prime_ = gamma_prime;
  return ks;
}

double KernelSpec::speed_factor(double u) const {
  if (!soft_) throw std::logic_error("speed factor is defined for the soft model only");
  return u >= gamma_ ? soft_->c * std::pow(u, -3.0 - soft_->eta) : 0.0;
}

std::string KernelSpec::model_name() const {
  switch (model_) {
    case Model::band:
      return "band";
    case Model::soft:
      return "soft";
    case Model::zero:
      return "zero";
    case Model::custom:
      return "custom";
  }
  return "unknown";
}

KernelSpec make_maxwellian_type_kernel(double B0, double gamma, double gamma_prime) {
  return KernelSpec::band(B0, gamma, gamma_prime);
}

KernelSpec make_soft_kernel(double c, double eta, double gamma, double gamma_prime) {
  return KernelSpec::soft(c, eta, gamma, gamma_prime);
}

bool KernelCertificate::passed() const {
  if (!b0_ok || !cutoff_ok || lower_bound.empty()) return false;
  for (const auto& [radius, value] : lower_bound)
    if (!(value > 0.0)) return false;
  return soft_ok.value_or(true);
}

nlohmann::json KernelCertificate::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  j["b0_ok"] = b0_ok;
  j["cutoff_ok"] = cutoff_ok;
  j["samples"] = samples;
  auto& lb = j["lower_bound"] = nlohmann::json::array();
  for (const auto& [radius, value] : lower_bound) lb.push_back({{"Gamma", radius}, {"c_Gamma", value}});
  if (soft_ok) j["soft_ok"] = *soft_ok;
  return j;
}

KernelCertificate validate_kernel(const KernelSpec& ks, std::span<const double> gammas,
                                  std::size_t n_samples) {
  if (n_samples < 1000) throw std::invalid_argument("kernel validation needs at least 1000 samples");
  KernelCertificate cert;
  cert.samples = n_samples;

  const double gamma = ks.gamma();
  const double gp = ks.gamma_prime();
  double u_max = 2.0 * gamma;
  for (double g : gammas) u_max = std::max(u_max, 2.0 * g);

  cert.b0_ok = true;
  cert.cutoff_ok = true;
  bool soft_ok = true;
  for (std::size_t i = 1; i <= n_samples; ++i) {
    const double u = u_max * radical_inverse(i, 2);
    const double c = 2.0 * radical_inverse(i, 3) - 1.0;
    const double b = ks(u, c);
    if (!(b >= 0.0 && b <= ks.B0())) cert.b0_ok = false;
    const double ac = std::abs(c);
    const bool forbidden = ac < gp || 1.0 - ac < gp || u < gamma;
    if (forbidden && b != 0.0) cert.cutoff_ok = false;
    if (const auto& soft = ks.soft_factor()) {
      if (u >= gamma) {
        const double b1 = ks.speed_factor(u);
        if (std::abs(b1) * std::pow(u, 3.0 + soft->eta) > soft->c * (1.0 + 1e-12)) soft_ok = false;
      }
    }
  }
  if (ks.soft_factor()) cert.soft_ok = soft_ok;

  // The kernel depends on n only through cos theta, so the sphere integral is
  // 2 pi times a cos-theta integral.
  constexpr std::size_t kSpeedSamples = 512;
  for (double radius : gammas) {
    if (!(radius > gamma)) throw std::invalid_argument("Gamma must exceed the speed cutoff gamma");
    std::vector<double> speeds(kSpeedSamples);
    const double ratio = std::log(radius / gamma);
    for (std::size_t m = 0; m < kSpeedSamples; ++m)
      speeds[m] = gamma * std::exp(ratio * static_cast<double>(m) / (kSpeedSamples - 1));
    speeds.back() = radius;
    double integral = 0.0;
    const double h = 2.0 / static_cast<double>(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double c = -1.0 + (static_cast<double>(i) + 0.5) * h;
      double inf = std::numeric_limits<double>::infinity();
      for (double u : speeds) inf = std::min(inf, ks(u, c));
      integral += inf * h;
    }
    cert.lower_bound[radius] = 2.0 * std::numbers::pi * integral;
  }
  return cert;
}

}  // namespace haldane
