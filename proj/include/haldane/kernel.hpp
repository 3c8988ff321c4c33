#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

namespace haldane {

/// Speed factor of a very soft kernel: B1(u) = c u^(-3-eta) for u >= gamma.
struct SoftFactor {
  double c;
  double eta;
};

/// Collision kernel B(u, cos theta) with the cutoff data it is certified against.
///
/// Every model vanishes for |cos theta| < gamma', for 1 - |cos theta| < gamma'
/// and for u < gamma, and is bounded by B0.
class KernelSpec {
 public:
  enum class Model { band, soft, zero, custom };

  using Function = std::function<double(double u, double cos_theta)>;

  static KernelSpec band(double B0, double gamma, double gamma_prime);
  static KernelSpec soft(double c, double eta, double gamma, double gamma_prime);
  static KernelSpec zero();
  static KernelSpec custom(Function B, double B0, double gamma, double gamma_prime);

  double operator()(double u, double cos_theta) const {
    switch (model_) {
      case Model::band:
        return u >= gamma_ && in_band(cos_theta) ? B0_ : 0.0;
      case Model::soft:
        return u >= gamma_ && in_band(cos_theta) ? soft_->c * std::pow(u, -3.0 - soft_->eta) : 0.0;
      case Model::zero:
        return 0.0;
      case Model::custom:
        return custom_(u, cos_theta);
    }
    return 0.0;
  }

  /// Angular factor B2 of the soft model (the band indicator).
  bool in_band(double cos_theta) const {
    const double c = std::abs(cos_theta);
    return c >= gamma_prime_ && 1.0 - c >= gamma_prime_;
  }
  /// Speed factor B1 of the soft model; throws for other models.
  double speed_factor(double u) const;

  /// Band and soft kernels factor as radial(u) * (band indicator).
  bool separable() const { return model_ == Model::band || model_ == Model::soft || model_ == Model::zero; }
  double radial(double u) const {
    switch (model_) {
      case Model::band:
        return u >= gamma_ ? B0_ : 0.0;
      case Model::soft:
        return u >= gamma_ ? soft_->c * std::pow(u, -3.0 - soft_->eta) : 0.0;
      default:
        return 0.0;
    }
  }

  Model model() const { return model_; }
  std::string model_name() const;
  double B0() const { return B0_; }
  double gamma() const { return gamma_; }
  double gamma_prime() const { return gamma_prime_; }
  const std::optional<SoftFactor>& soft_factor() const { return soft_; }

 private:
  KernelSpec() = default;

  Model model_ = Model::zero;
  double B0_ = 0.0;
  double gamma_ = 0.0;
  double gamma_prime_ = 0.0;
  std::optional<SoftFactor> soft_;
  Function custom_;
};

/// B = B0 1{u >= gamma} 1{gamma' <= |cos theta| <= 1 - gamma'}.
KernelSpec make_maxwellian_type_kernel(double B0, double gamma, double gamma_prime);

/// B = c u^(-3-eta) 1{u >= gamma} times the band indicator; B0 = c gamma^(-3-eta).
KernelSpec make_soft_kernel(double c, double eta, double gamma, double gamma_prime);

struct KernelCertificate {
  bool b0_ok = false;
  bool cutoff_ok = false;
  /// Gamma -> measured c_Gamma.
  std::map<double, double> lower_bound;
  std::optional<bool> soft_ok;
  std::size_t samples = 0;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Checks the bound, the cutoff zeros and (for soft kernels) the decay on a
/// Halton set of (u, cos theta) samples, and measures
/// c_Gamma = int_{S^2} inf_{u in [gamma, Gamma]} B(u, theta) dn
/// with a 512-point log-spaced inner minimum and an n_samples midpoint rule in cos theta.
KernelCertificate validate_kernel(const KernelSpec& ks, std::span<const double> gammas,
                                  std::size_t n_samples);

}  // namespace haldane
