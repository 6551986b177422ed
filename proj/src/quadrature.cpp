#include "bionet/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace bionet::quad {

EdgeRule gauss_legendre_nodes(int q) {
  EdgeRule rule;
  rule.q = q;
  if (q == 3) {
    const double s = std::sqrt(3.0 / 5.0);
    rule.nodes = {0.5 * (1.0 - s), 0.5, 0.5 * (1.0 + s), 0.0, 0.0};
    rule.weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0, 0.0, 0.0};
  } else if (q == 5) {
    const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
    const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
    rule.nodes = {0.5 * (1.0 - b), 0.5 * (1.0 - a), 0.5, 0.5 * (1.0 + a),
                  0.5 * (1.0 + b)};
    rule.weights = {0.5 * wb, 0.5 * wa, 0.5 * (128.0 / 225.0), 0.5 * wa, 0.5 * wb};
  } else {
    throw std::invalid_argument("gauss_legendre_nodes: unsupported q (use 3 or 5)");
  }
  return rule;
}

BiPolynomial::BiPolynomial(int deg_x, int deg_y)
    : nx_(deg_x + 1), ny_(deg_y + 1), c_(nx_ * ny_, 0.0) {
  if (deg_x < 0 || deg_y < 0)
    throw std::invalid_argument("BiPolynomial: negative degree");
}

BiPolynomial BiPolynomial::constant(double c) {
  BiPolynomial p(0, 0);
  p.set_coeff(0, 0, c);
  return p;
}

BiPolynomial BiPolynomial::monomial(int a, int b, double c) {
  BiPolynomial p(a, b);
  p.set_coeff(a, b, c);
  return p;
}

BiPolynomial BiPolynomial::operator+(const BiPolynomial& other) const {
  BiPolynomial out(std::max(deg_x(), other.deg_x()),
                   std::max(deg_y(), other.deg_y()));
  for (int a = 0; a < nx_; ++a)
    for (int b = 0; b < ny_; ++b) out.add_coeff(a, b, coeff(a, b));
  for (int a = 0; a < other.nx_; ++a)
    for (int b = 0; b < other.ny_; ++b) out.add_coeff(a, b, other.coeff(a, b));
  return out;
}

BiPolynomial BiPolynomial::operator-(const BiPolynomial& other) const {
  return *this + other.scaled(-1.0);
}

BiPolynomial BiPolynomial::operator*(const BiPolynomial& other) const {
  BiPolynomial out(deg_x() + other.deg_x(), deg_y() + other.deg_y());
  for (int a = 0; a < nx_; ++a)
    for (int b = 0; b < ny_; ++b) {
      const double cab = coeff(a, b);
      if (cab == 0.0) continue;
      for (int a2 = 0; a2 < other.nx_; ++a2)
        for (int b2 = 0; b2 < other.ny_; ++b2)
          out.add_coeff(a + a2, b + b2, cab * other.coeff(a2, b2));
    }
  return out;
}

BiPolynomial BiPolynomial::scaled(double s) const {
  BiPolynomial out = *this;
  for (double& v : out.c_) v *= s;
  return out;
}

BiPolynomial BiPolynomial::antiderivative_x() const {
  BiPolynomial out(deg_x() + 1, deg_y());
  for (int a = 0; a < nx_; ++a)
    for (int b = 0; b < ny_; ++b) out.set_coeff(a + 1, b, coeff(a, b) / (a + 1));
  return out;
}

BiPolynomial BiPolynomial::derivative_x() const {
  if (deg_x() == 0) return BiPolynomial(0, deg_y());
  BiPolynomial out(deg_x() - 1, deg_y());
  for (int a = 1; a < nx_; ++a)
    for (int b = 0; b < ny_; ++b) out.set_coeff(a - 1, b, a * coeff(a, b));
  return out;
}

BiPolynomial BiPolynomial::derivative_y() const {
  if (deg_y() == 0) return BiPolynomial(deg_x(), 0);
  BiPolynomial out(deg_x(), deg_y() - 1);
  for (int a = 0; a < nx_; ++a)
    for (int b = 1; b < ny_; ++b) out.set_coeff(a, b - 1, b * coeff(a, b));
  return out;
}

double BiPolynomial::eval(double x, double y) const {
  // Horner in x of Horner-in-y rows.
  double acc = 0.0;
  for (int a = nx_ - 1; a >= 0; --a) {
    double row = 0.0;
    for (int b = ny_ - 1; b >= 0; --b) row = row * y + coeff(a, b);
    acc = acc * x + row;
  }
  return acc;
}

double integrate_polygon(const BiPolynomial& f, std::span<const geom::Point> poly,
                         const EdgeRule& rule) {
  const BiPolynomial big_f = f.antiderivative_x();
  const size_t m = poly.size();
  double total = 0.0;
  for (size_t r = 0; r < m; ++r) {
    const geom::Point& p = poly[r];
    const geom::Point& q = poly[(r + 1) % m];
    const double dy = q.y - p.y;
    if (dy == 0.0) continue;
    const double dx = q.x - p.x;
    double edge = 0.0;
    for (int s = 0; s < rule.q; ++s) {
      const double t = rule.nodes[s];
      edge += rule.weights[s] * big_f.eval(p.x + t * dx, p.y + t * dy);
    }
    total += edge * dy;
  }
  return total;
}

double integrate_polygon(const BiPolynomial& f, const geom::CutCellPolygon& poly,
                         const EdgeRule& rule) {
  return integrate_polygon(f, std::span<const geom::Point>(poly.vertices), rule);
}

BiPolynomial q1_basis_local(int corner, double h) {
  // 1-D hats on [0,h]: lo(t) = 1 - t/h, hi(t) = t/h.
  BiPolynomial p(1, 1);
  const double inv = 1.0 / h;
  switch (corner) {
    case 0:  // (0,0): lo(xi) lo(eta)
      p.set_coeff(0, 0, 1.0);
      p.set_coeff(1, 0, -inv);
      p.set_coeff(0, 1, -inv);
      p.set_coeff(1, 1, inv * inv);
      break;
    case 1:  // (h,0): hi(xi) lo(eta)
      p.set_coeff(1, 0, inv);
      p.set_coeff(1, 1, -inv * inv);
      break;
    case 2:  // (h,h): hi(xi) hi(eta)
      p.set_coeff(1, 1, inv * inv);
      break;
    case 3:  // (0,h): lo(xi) hi(eta)
      p.set_coeff(0, 1, inv);
      p.set_coeff(1, 1, -inv * inv);
      break;
    default:
      throw std::invalid_argument("q1_basis_local: corner must be 0..3");
  }
  return p;
}

namespace {

// Polygon shifted to cell-local coordinates; keeps the integrand
// coefficients well-scaled independently of where the cell sits.
std::vector<geom::Point> local_vertices(const geom::CutCellPolygon& poly) {
  std::vector<geom::Point> out;
  out.reserve(poly.vertices.size());
  for (const geom::Point& v : poly.vertices)
    out.push_back({v.x - poly.origin.x, v.y - poly.origin.y});
  return out;
}

}  // namespace

double local_mass_block(int i, int j, const geom::CutCellPolygon& poly,
                        const EdgeRule& rule) {
  const BiPolynomial f = q1_basis_local(i, poly.h) * q1_basis_local(j, poly.h);
  const auto verts = local_vertices(poly);
  return integrate_polygon(f, std::span<const geom::Point>(verts), rule);
}

double local_stiffness_block(int i, int j, const SymTensor& m,
                             const geom::CutCellPolygon& poly, const EdgeRule& rule) {
  const BiPolynomial bi = q1_basis_local(i, poly.h);
  const BiPolynomial bj = q1_basis_local(j, poly.h);
  const BiPolynomial gxi = bi.derivative_x(), gyi = bi.derivative_y();
  const BiPolynomial gxj = bj.derivative_x(), gyj = bj.derivative_y();
  const BiPolynomial f = (gxi * gxj).scaled(m.xx) +
                         ((gxi * gyj) + (gyi * gxj)).scaled(m.xy) +
                         (gyi * gyj).scaled(m.yy);
  const auto verts = local_vertices(poly);
  return integrate_polygon(f, std::span<const geom::Point>(verts), rule);
}

double local_load(int i, const geom::CutCellPolygon& poly, const EdgeRule& rule) {
  const auto verts = local_vertices(poly);
  return integrate_polygon(q1_basis_local(i, poly.h),
                           std::span<const geom::Point>(verts), rule);
}

}  // namespace bionet::quad
