#pragma once

// Exact integration over cut-cell polygons via the divergence theorem:
// an integral of f over the polygon is reduced to edge integrals of the
// x-antiderivative F (div (F,0) = f), each evaluated with a Gauss-Legendre
// rule on the edge parameter. The reduction is exact whenever F restricted
// to an (affine) edge has degree <= 2q-1.

#include <array>
#include <span>
#include <vector>

#include "bionet/geometry.hpp"

namespace bionet::quad {

/// Gauss-Legendre rule mapped to the parameter interval [0,1].
struct EdgeRule {
  int q = 0;
  std::array<double, 5> nodes{};
  std::array<double, 5> weights{};  // sum to 1 on the unit interval
};

/// The standard q-point rule, q in {3,5}. q=3 integrates univariate
/// polynomials of degree <= 5 exactly, q=5 of degree <= 9.
EdgeRule gauss_legendre_nodes(int q);

/// Dense bivariate polynomial sum c_ab x^a y^b with small bounded bidegree.
class BiPolynomial {
public:
  BiPolynomial() : BiPolynomial(0, 0) {}
  BiPolynomial(int deg_x, int deg_y);

  static BiPolynomial constant(double c);
  static BiPolynomial monomial(int a, int b, double c = 1.0);

  int deg_x() const { return nx_ - 1; }
  int deg_y() const { return ny_ - 1; }

  double coeff(int a, int b) const { return c_[a * ny_ + b]; }
  void set_coeff(int a, int b, double v) { c_[a * ny_ + b] = v; }
  void add_coeff(int a, int b, double v) { c_[a * ny_ + b] += v; }

  BiPolynomial operator+(const BiPolynomial& other) const;
  BiPolynomial operator-(const BiPolynomial& other) const;
  BiPolynomial operator*(const BiPolynomial& other) const;
  BiPolynomial scaled(double s) const;

  /// Antiderivative in x with zero constant term; derivative_x undoes it.
  BiPolynomial antiderivative_x() const;
  BiPolynomial derivative_x() const;
  BiPolynomial derivative_y() const;

  double eval(double x, double y) const;

private:
  int nx_ = 1, ny_ = 1;        // coefficient table extents (degree + 1)
  std::vector<double> c_;      // c_[a * ny_ + b]
};

/// Integral of f over a simple counterclockwise polygon: sum over edges of
/// the quadrature of the x-antiderivative against dy.
double integrate_polygon(const BiPolynomial& f, std::span<const geom::Point> poly,
                         const EdgeRule& rule);
double integrate_polygon(const BiPolynomial& f, const geom::CutCellPolygon& poly,
                         const EdgeRule& rule);

/// Q1 basis of the owning cell in cell-local coordinates (xi, eta) in [0,h]^2;
/// corner ids counterclockwise from the lower-left corner.
BiPolynomial q1_basis_local(int corner, double h);

struct SymTensor {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
};

/// Integral over the polygon of phi_i * phi_j; exact with the 3-point rule
/// (the product is bi-quadratic, its x-antiderivative has degree 5 on edges).
double local_mass_block(int i, int j, const geom::CutCellPolygon& poly,
                        const EdgeRule& rule);

/// Integral over the polygon of grad(phi_i) . M grad(phi_j) with M constant.
double local_stiffness_block(int i, int j, const SymTensor& m,
                             const geom::CutCellPolygon& poly, const EdgeRule& rule);

/// Integral over the polygon of phi_i.
double local_load(int i, const geom::CutCellPolygon& poly, const EdgeRule& rule);

}  // namespace bionet::quad
