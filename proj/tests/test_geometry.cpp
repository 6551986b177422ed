#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bionet/geometry.hpp"

using namespace bionet;
using geom::LevelSet;
using geom::NodeClass;
using geom::Point;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("level set: circle values") {
  const LevelSet ls = LevelSet::circle({0.5, 0.5}, 0.45);
  CHECK(ls(0.5, 0.5) == doctest::Approx(-0.45).epsilon(1e-15));
  CHECK(ls(0.95, 0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(ls(0.0, 0.0) > 0.0);
  CHECK(ls(0.5, 0.05) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("level set: leaf is the max of the two circles") {
  const LevelSet leaf = LevelSet::leaf({0.4, 0.5}, {0.6, 0.5}, 0.4);
  CHECK(leaf(0.5, 0.5) == doctest::Approx(-0.3).epsilon(1e-14));
  const LevelSet c1 = LevelSet::circle({0.4, 0.5}, 0.4);
  const LevelSet c2 = LevelSet::circle({0.6, 0.5}, 0.4);
  for (double x = 0.05; x < 1.0; x += 0.17) {
    for (double y = 0.08; y < 1.0; y += 0.13) {
      CHECK(leaf(x, y) == std::max(c1(x, y), c2(x, y)));
    }
  }
}

TEST_CASE("level set: rotated leaf at theta=0 equals the leaf") {
  const LevelSet leaf = LevelSet::leaf({0.4, 0.5}, {0.6, 0.5}, 0.4);
  const LevelSet rot = LevelSet::rotated_leaf({0.4, 0.5}, {0.6, 0.5}, 0.4, 0.0);
  for (double x = 0.0; x <= 1.0; x += 0.11) {
    for (double y = 0.0; y <= 1.0; y += 0.09) {
      CHECK(rot(x, y) == leaf(x, y));
    }
  }
}

TEST_CASE("level set: interior/exterior sampling across variants") {
  const LevelSet rot =
      LevelSet::rotated_leaf({0.4, 0.5}, {0.6, 0.5}, 0.4, kPi / 4.0);
  // The lens center stays at the square center under in-place rotation.
  CHECK(rot(0.5, 0.5) < 0.0);
  CHECK(rot(0.0, 0.0) > 0.0);
  CHECK(rot(0.99, 0.99) > 0.0);
}

TEST_CASE("classify_nodes: circle at N=10") {
  const auto topo = geom::classify_nodes(LevelSet::circle({0.5, 0.5}, 0.45), 10);
  CHECK(topo.h == doctest::Approx(0.1));
  CHECK(topo.cls(5, 5) == NodeClass::Internal);
  CHECK(topo.cls(0, 0) == NodeClass::Inactive);

  int internal = 0, ghost = 0, inactive = 0;
  const int m = topo.nodes_per_axis();
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      switch (topo.cls(i, j)) {
        case NodeClass::Internal: ++internal; break;
        case NodeClass::Ghost: ++ghost; break;
        case NodeClass::Inactive: ++inactive; break;
      }
    }
  }
  CHECK(internal + ghost + inactive == m * m);
  CHECK(internal > 0);
  CHECK(ghost > 0);

  // Ghosts lie outside and touch the interior through the 8-neighborhood.
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      if (topo.cls(i, j) != NodeClass::Ghost) continue;
      CHECK(topo.phi[topo.node_index(i, j)] >= 0.0);
      bool touches = false;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= m || jj >= m || (di == 0 && dj == 0))
            continue;
          touches |= topo.cls(ii, jj) == NodeClass::Internal;
        }
      CHECK(touches);
    }
  }
}

TEST_CASE("classify_nodes: snapping reclassifies near-boundary nodes") {
  // Node (8,5) = (0.8, 0.5) sits at signed distance -h^2/2 for this radius.
  const int n = 10;
  const double h = 1.0 / n;
  const LevelSet ls = LevelSet::circle({0.5, 0.5}, 0.3 + 0.5 * h * h);
  CHECK(ls(0.8, 0.5) == doctest::Approx(-0.5 * h * h).epsilon(1e-12));

  const auto topo = geom::classify_nodes(ls, n, 1.0, 2.0);
  CHECK(topo.cls(8, 5) == NodeClass::Ghost);
  CHECK(topo.phi[topo.node_index(8, 5)] ==
        std::numeric_limits<double>::epsilon());

  // Snapping idempotence: no surviving node is inside the snap band.
  for (int k = 0; k < topo.node_count(); ++k) {
    const double phi = topo.phi[k];
    const bool in_band = phi < 0.0 && -phi < 1.0 * h * h;
    CHECK_FALSE(in_band);
  }
}

TEST_CASE("classify_nodes: empty domain fails") {
  CHECK_THROWS_AS(geom::classify_nodes(LevelSet::circle({0.5, 0.5}, 0.01), 4),
                  std::runtime_error);
}

TEST_CASE("classify_nodes: rotation by pi/2 permutes the classification") {
  const int n = 20;
  const auto leaf =
      geom::classify_nodes(LevelSet::leaf({0.4, 0.5}, {0.6, 0.5}, 0.4), n);
  const auto rot = geom::classify_nodes(
      LevelSet::rotated_leaf({0.4, 0.5}, {0.6, 0.5}, 0.4, kPi / 2.0), n);
  // (i, j) rotates to (n - j, i) about the square center.
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      CHECK(rot.cls(n - j, i) == leaf.cls(i, j));
}

TEST_CASE("edge_intersections: interpolation and labels") {
  const double h = 1.0;
  const std::array<Point, 4> corners{{{0, 0}, {h, 0}, {h, h}, {0, h}}};

  SUBCASE("symmetric crossing") {
    const auto cut = geom::edge_intersections(corners, {-1.0, 1.0, 1.0, -1.0});
    // Entering edge k0->k1 has phi(k0) < 0, so its crossing is A.
    CHECK(cut.a.x == doctest::Approx(0.5));
    CHECK(cut.a.y == doctest::Approx(0.0));
    CHECK(cut.b.x == doctest::Approx(0.5));
    CHECK(cut.b.y == doctest::Approx(1.0));
  }
  SUBCASE("asymmetric crossing: theta = 0.75") {
    const auto cut = geom::edge_intersections(corners, {-0.3, 0.1, 0.1, 0.1});
    CHECK(cut.a.x == doctest::Approx(0.75));
    CHECK(cut.a.y == doctest::Approx(0.0));
    CHECK(cut.b.x == doctest::Approx(0.0));
    CHECK(cut.b.y == doctest::Approx(0.75));
  }
  SUBCASE("saddle cells are rejected") {
    CHECK_THROWS_AS(geom::edge_intersections(corners, {-1.0, 1.0, -1.0, 1.0}),
                    std::runtime_error);
  }
  SUBCASE("uncut cells are rejected") {
    CHECK_THROWS_AS(geom::edge_intersections(corners, {-1.0, -1.0, -1.0, -1.0}),
                    std::runtime_error);
  }
}

TEST_CASE("clip_cell_values: vertex counts by corner pattern") {
  const double h = 0.25;
  SUBCASE("all internal: the full square") {
    const auto poly = geom::clip_cell_values({0, 0}, h, {-1, -1, -1, -1});
    REQUIRE(poly.has_value());
    CHECK(poly->vertices.size() == 4);
    CHECK_FALSE(poly->has_cut);
    CHECK(poly->area() == doctest::Approx(h * h).epsilon(1e-14));
  }
  SUBCASE("one internal corner: a triangle") {
    const auto poly = geom::clip_cell_values({0, 0}, h, {-1, 1, 1, 1});
    REQUIRE(poly.has_value());
    CHECK(poly->vertices.size() == 3);
    CHECK(poly->has_cut);
    CHECK(poly->area() > 0.0);
  }
  SUBCASE("two adjacent internal corners: a quadrilateral") {
    const auto poly = geom::clip_cell_values({0, 0}, h, {-1, -1, 1, 1});
    REQUIRE(poly.has_value());
    CHECK(poly->vertices.size() == 4);
    CHECK(poly->area() == doctest::Approx(0.5 * h * h).epsilon(1e-14));
  }
  SUBCASE("three internal corners: a pentagon") {
    const auto poly = geom::clip_cell_values({0, 0}, h, {-1, -1, -1, 1});
    REQUIRE(poly.has_value());
    CHECK(poly->vertices.size() == 5);
    CHECK(poly->area() > 0.0);
  }
  SUBCASE("no internal corner: nothing") {
    CHECK_FALSE(geom::clip_cell_values({0, 0}, h, {1, 1, 1, 1}).has_value());
  }
  SUBCASE("exactly phi = 0 counts as outside") {
    const auto poly = geom::clip_cell_values({0, 0}, h, {-1, 0.0, 1, 1});
    REQUIRE(poly.has_value());
    CHECK(poly->vertices.size() == 3);
  }
}

TEST_CASE("clip_cell: half-plane cuts land exactly on the line") {
  const int n = 16;
  const double h = 1.0 / n;
  const double c = 0.5 + h / 3.0;  // off-grid vertical line x = c
  const int ci = static_cast<int>(c / h);
  for (int cj = 3; cj < 7; ++cj) {
    const Point o{ci * h, cj * h};
    const std::array<double, 4> phi{o.x - c, o.x + h - c, o.x + h - c, o.x - c};
    const auto poly = geom::clip_cell_values(o, h, phi);
    REQUIRE(poly.has_value());
    CHECK(poly->has_cut);
    CHECK(poly->cut_a.x == doctest::Approx(c).epsilon(1e-15));
    CHECK(poly->cut_b.x == doctest::Approx(c).epsilon(1e-15));
  }
}

TEST_CASE("clip_cell: polygon areas converge to the circle area") {
  const double exact = kPi * 0.45 * 0.45;
  for (int n : {20, 40, 80}) {
    const auto topo =
        geom::classify_nodes(LevelSet::circle({0.5, 0.5}, 0.45), n);
    double total = 0.0;
    for (int cj = 0; cj < n; ++cj) {
      for (int ci = 0; ci < n; ++ci) {
        const auto poly = geom::clip_cell(topo, ci, cj);
        if (poly) {
          CHECK(poly->area() > 0.0);
          total += poly->area();
        }
      }
    }
    const double hh = topo.h * topo.h;
    CHECK(std::abs(total - exact) <= 2.0 * hh);
  }
}
