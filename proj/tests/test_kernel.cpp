#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "haldane/kernel.hpp"

using namespace haldane;

TEST_CASE("band kernel values") {
  const auto k = make_maxwellian_type_kernel(1.0, 0.1, 0.1);
  CHECK(k(1.0, 0.5) == 1.0);
  CHECK(k(1.0, 0.05) == 0.0);
  CHECK(k(1.0, 0.95) == 0.0);
  CHECK(k(0.05, 0.5) == 0.0);
  CHECK(k(1.0, -0.5) == 1.0);
  CHECK_THROWS(make_maxwellian_type_kernel(-1.0, 0.1, 0.1));
  CHECK_THROWS(make_maxwellian_type_kernel(1.0, 0.0, 0.1));
  CHECK_THROWS(make_maxwellian_type_kernel(1.0, 0.1, 0.5));
}

TEST_CASE("soft kernel values") {
  const double c = 2.0, eta = 1.0, g = 0.25;
  const auto k = make_soft_kernel(c, eta, g, 0.1);
  CHECK(k(0.2, 0.5) == 0.0);
  CHECK(k.speed_factor(2 * g) == doctest::Approx(c * std::pow(2 * g, -4.0)).epsilon(1e-15));
  CHECK(k.B0() == doctest::Approx(c * std::pow(g, -4.0)).epsilon(1e-15));
  for (int i = 0; i < 1000; ++i) {
    const double u = g * std::pow(1e4, i / 999.0);
    CHECK(k.speed_factor(u) * std::pow(u, 3.0 + eta) <= c * (1.0 + 1e-14));
    CHECK(k(u, 0.5) <= k.B0());
  }
  CHECK_THROWS(make_soft_kernel(1.0, 0.0, 0.1, 0.1));
}

TEST_CASE("validator on the band kernel") {
  const auto k = make_maxwellian_type_kernel(1.0, 0.1, 0.1);
  const std::vector<double> gammas{2.0, 5.0, 10.0};
  const auto cert = validate_kernel(k, gammas, 1000);
  CHECK(cert.passed());
  CHECK(cert.b0_ok);
  CHECK(cert.cutoff_ok);
  CHECK(!cert.soft_ok.has_value());
  // B0 times the band measure 4 pi (1 - 2 gamma').
  for (const auto& [radius, value] : cert.lower_bound)
    CHECK(value == doctest::Approx(10.053096491487338).epsilon(1e-12));
  const auto again = validate_kernel(k, gammas, 1000);
  CHECK(again.to_json().dump() == cert.to_json().dump());
}

TEST_CASE("validator rejects the zero kernel") {
  const std::vector<double> gammas{10.0};
  const auto cert = validate_kernel(KernelSpec::zero(), gammas, 1000);
  CHECK(!cert.passed());
  CHECK(cert.lower_bound.at(10.0) == 0.0);
}

TEST_CASE("validator on the soft kernel") {
  const auto k = make_soft_kernel(1.0, 1.0, 0.5, 0.1);
  const std::vector<double> gammas{2.0, 4.0, 8.0, 16.0};
  const auto cert = validate_kernel(k, gammas, 1000);
  CHECK(cert.passed());
  REQUIRE(cert.soft_ok.has_value());
  CHECK(*cert.soft_ok);
  CHECK(cert.lower_bound.at(16.0) > 0.0);
  const double slope = std::log(cert.lower_bound.at(16.0) / cert.lower_bound.at(2.0)) / std::log(8.0);
  CHECK(std::abs(slope + 4.0) <= 0.1);
}

TEST_CASE("validator needs enough samples") { CHECK_THROWS(validate_kernel(KernelSpec::zero(), std::vector<double>{2.0}, 10)); }
