#pragma once

// Test-only helpers: an independent triangulation-based integration oracle
// (Duffy-collapsed Gauss tensor rule per triangle, fanned over the polygon)
// and deterministic random cut-cell polygon generation. The oracle shares no
// code with the divergence-theorem quadrature it checks.

#include <array>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "bionet/geometry.hpp"

namespace testsupport {

using bionet::geom::CutCellPolygon;
using bionet::geom::Point;

using Fn2 = std::function<double(double, double)>;

// 8-point Gauss-Legendre on [0,1] (exact through degree 15).
inline const std::array<double, 8>& gauss8_nodes() {
  static const std::array<double, 8> n = {
      0.5 - 0.5 * 0.9602898564975363, 0.5 - 0.5 * 0.7966664774136267,
      0.5 - 0.5 * 0.5255324099163290, 0.5 - 0.5 * 0.1834346424956498,
      0.5 + 0.5 * 0.1834346424956498, 0.5 + 0.5 * 0.5255324099163290,
      0.5 + 0.5 * 0.7966664774136267, 0.5 + 0.5 * 0.9602898564975363};
  return n;
}
inline const std::array<double, 8>& gauss8_weights() {
  static const std::array<double, 8> w = {
      0.5 * 0.1012285362903763, 0.5 * 0.2223810344533745,
      0.5 * 0.3137066458778873, 0.5 * 0.3626837833783620,
      0.5 * 0.3626837833783620, 0.5 * 0.3137066458778873,
      0.5 * 0.2223810344533745, 0.5 * 0.1012285362903763};
  return w;
}

// Duffy map: P(u,v) = a + u (b - a) + u v (c - b), |J| = u |det(b-a, c-b)|.
inline double integrate_triangle(const Fn2& f, Point a, Point b, Point c) {
  const double det =
      (b.x - a.x) * (c.y - b.y) - (c.x - b.x) * (b.y - a.y);
  const auto& nodes = gauss8_nodes();
  const auto& weights = gauss8_weights();
  double total = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double u = nodes[i];
    for (int j = 0; j < 8; ++j) {
      const double v = nodes[j];
      const double x = a.x + u * (b.x - a.x) + u * v * (c.x - b.x);
      const double y = a.y + u * (b.y - a.y) + u * v * (c.y - b.y);
      total += weights[i] * weights[j] * u * f(x, y);
    }
  }
  return total * std::abs(det);
}

// Fan triangulation from vertex 0; valid for the convex cut-cell polygons.
inline double integrate_polygon_oracle(const Fn2& f, const std::vector<Point>& poly) {
  if (poly.size() < 3) throw std::invalid_argument("oracle: need >= 3 vertices");
  double total = 0.0;
  for (size_t k = 1; k + 1 < poly.size(); ++k)
    total += integrate_triangle(f, poly[0], poly[k], poly[k + 1]);
  return total;
}

// A random cut-cell polygon in the positive quadrant: a random cell sliced
// by a random line through its interior (3-5 vertices).
inline CutCellPolygon random_cut_polygon(std::mt19937& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    const double h = 0.05 + 0.35 * unit(rng);
    const Point origin{unit(rng) * (1.0 - h), unit(rng) * (1.0 - h)};
    const double angle = 2.0 * 3.14159265358979323846 * unit(rng);
    const Point through{origin.x + h * (0.15 + 0.7 * unit(rng)),
                        origin.y + h * (0.15 + 0.7 * unit(rng))};
    const double nx = std::cos(angle), ny = std::sin(angle);
    auto phi = [&](double x, double y) {
      return nx * (x - through.x) + ny * (y - through.y);
    };
    const std::array<double, 4> values{
        phi(origin.x, origin.y), phi(origin.x + h, origin.y),
        phi(origin.x + h, origin.y + h), phi(origin.x, origin.y + h)};
    int inside = 0;
    for (double v : values) inside += v < 0.0 ? 1 : 0;
    if (inside == 0 || inside == 4) continue;
    auto poly = bionet::geom::clip_cell_values(origin, h, values);
    if (!poly || poly->area() < 1e-4 * h * h) continue;
    return *poly;
  }
}

}  // namespace testsupport
