#include <doctest.h>

#include <cmath>
#include <numbers>

#include "haldane/grid.hpp"

using namespace haldane;

TEST_CASE("small grid keeps every node inside the ball") {
  const auto g = build_grid(1, 1, 1.0, 2, "lebedev:5");
  CHECK(g.node_count() > 0);
  for (const auto& v : g.velocities()) CHECK(norm2(v) <= 1.0 + 1e-12);
}

TEST_CASE("sphere weights sum to 4 pi") {
  for (const char* id : {"lebedev:3", "lebedev:5", "lebedev:7", "lebedev:9", "product:2:4", "product:8:16"}) {
    const auto r = make_sphere_rule(id);
    CHECK(std::abs(r.weight_sum() - 4.0 * std::numbers::pi) <= 1e-12 * 4.0 * std::numbers::pi);
    for (const auto& n : r.nodes) CHECK(std::abs(norm2(n.n) - 1.0) < 1e-14);
  }
}

TEST_CASE("standard grid node count matches lattice enumeration") {
  const auto g = build_grid(1, 32, 6.0, 16, "lebedev:5");
  // 2176 from an independent enumeration of the 16^3 midpoint lattice on [-6, 6]^3.
  CHECK(g.node_count() == 2176);
  std::size_t count = 0;
  const double dv = 12.0 / 16;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      for (int l = 0; l < 16; ++l) {
        const double x = dv * (i - 7.5), y = dv * (j - 7.5), z = dv * (l - 7.5);
        if (x * x + y * y + z * z <= 36.0) ++count;
      }
  CHECK(g.node_count() == count);
  CHECK(g.cell_count() == 32);
  CHECK(g.dx() * g.nx() == 1.0);
}

TEST_CASE("odd nv and bad parameters are rejected") {
  CHECK_THROWS_AS(build_grid(1, 4, 6.0, 15, "lebedev:5"), std::invalid_argument);
  CHECK_THROWS(build_grid(4, 4, 6.0, 16, "lebedev:5"));
  CHECK_THROWS(build_grid(1, 4, -1.0, 16, "lebedev:5"));
  CHECK_THROWS(make_sphere_rule("lebedev:17"));
  CHECK_THROWS(make_sphere_rule("nonsense"));
}

TEST_CASE("chi_j examples and symmetry") {
  CHECK(chi_j({0, 0, 0}, {0, 0, 0}, 1.0) == 1);
  CHECK(chi_j({1, 0, 0}, {0, 0.1, 0}, 1.0) == 0);
  CHECK(chi_j({1, 0, 0}, {0, 2, 0}, 3.0) == 1);
  const auto g = build_grid(1, 1, 3.0, 6, "lebedev:3");
  for (std::size_t a = 0; a < g.node_count(); ++a)
    for (std::size_t b = 0; b < g.node_count(); ++b)
      CHECK(chi_j(g.velocity(a), g.velocity(b), 2.5) == chi_j(g.velocity(b), g.velocity(a), 2.5));
}

TEST_CASE("velocity set is closed under v -> -v") {
  const auto g = build_grid(2, 4, 5.0, 12, "lebedev:5");
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    const auto m = g.mirror(n);
    for (int a = 0; a < 3; ++a) CHECK(g.velocity(m)[a] == -g.velocity(n)[a]);
    CHECK(g.mirror(m) == n);
  }
}

TEST_CASE("doubling nv keeps the covered ball") {
  // Every coarse node has a fine node within half a fine spacing per axis.
  const auto coarse = build_grid(1, 1, 4.0, 8, "lebedev:3");
  const auto fine = build_grid(1, 1, 4.0, 16, "lebedev:3");
  CHECK(fine.node_count() > coarse.node_count());
  for (const auto& v : coarse.velocities()) {
    bool near = false;
    for (const auto& w : fine.velocities()) {
      bool inside = true;
      for (int a = 0; a < 3; ++a) inside = inside && std::abs(v[a] - w[a]) <= 0.5 * fine.dv() + 1e-12;
      near = near || inside;
    }
    CHECK(near);
  }
}

TEST_CASE("grid header round trip") {
  const auto g = build_grid(2, 8, 6.0, 12, "product:4:8", 7.5);
  const auto h = grid_from_header(g.header());
  CHECK(h.header() == g.header());
  CHECK(h.same_layout(g));
  CHECK_THROWS(grid_from_header("k=1 nx=4"));
}

TEST_CASE("field invariants") {
  auto g = std::make_shared<const PhaseGrid>(build_grid(1, 2, 2.0, 4, "lebedev:3"));
  DistributionField f(g, 0.5);
  CHECK_NOTHROW(f.check_invariants());
  f.at(1, 3) = 2.0;
  CHECK_NOTHROW(f.check_invariants());
  f.at(1, 3) = std::nextafter(2.0, 3.0);
  CHECK_THROWS_AS(f.check_invariants(), InvariantBreach);
  f.at(1, 3) = std::nan("");
  try {
    f.check_invariants();
    FAIL("expected breach");
  } catch (const InvariantBreach& e) {
    CHECK(e.cell() == 1);
    CHECK(e.node() == 3);
  }
}
