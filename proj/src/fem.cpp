#include "bionet/fem.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace bionet::fem {

int SparsityPattern::slot(int r, int c) const {
  const int lo = row_ptr[r], hi = row_ptr[r + 1];
  for (int k = lo; k < hi; ++k)
    if (col[k] == c) return k;
  throw std::logic_error("SparsityPattern: entry not present");
}

void SparseOperator::matvec(const double* x, double* y) const {
  const SparsityPattern& p = *pattern_;
  for (int r = 0; r < p.n; ++r) {
    double acc = 0.0;
    for (int k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k)
      acc += values_[k] * x[p.col[k]];
    y[r] = acc;
  }
}

std::vector<double> SparseOperator::matvec(const std::vector<double>& x) const {
  std::vector<double> y(rows());
  matvec(x.data(), y.data());
  return y;
}

std::vector<double> SparseOperator::diagonal() const {
  const SparsityPattern& p = *pattern_;
  std::vector<double> d(p.n, 0.0);
  for (int r = 0; r < p.n; ++r)
    for (int k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k)
      if (p.col[k] == r) d[r] = values_[k];
  return d;
}

void SparseOperator::add_scaled(const SparseOperator& other, double s) {
  if (other.pattern_ != pattern_)
    throw std::logic_error("SparseOperator::add_scaled: pattern mismatch");
  for (size_t k = 0; k < values_.size(); ++k) values_[k] += s * other.values_[k];
}

namespace {

// Local corner offsets, counterclockwise from the lower-left.
constexpr int kCornerDi[4] = {0, 1, 1, 0};
constexpr int kCornerDj[4] = {0, 0, 1, 1};

void fill_local_blocks(CellData& cd, const quad::EdgeRule& rule) {
  const geom::CutCellPolygon& poly = cd.poly;
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      const double mij = quad::local_mass_block(i, j, poly, rule);
      const double xx = quad::local_stiffness_block(i, j, {1.0, 0.0, 0.0}, poly, rule);
      const double yy = quad::local_stiffness_block(i, j, {0.0, 0.0, 1.0}, poly, rule);
      const double xy = quad::local_stiffness_block(i, j, {0.0, 1.0, 0.0}, poly, rule);
      cd.mass[i * 4 + j] = cd.mass[j * 4 + i] = mij;
      cd.gxx[i * 4 + j] = cd.gxx[j * 4 + i] = xx;
      cd.gyy[i * 4 + j] = cd.gyy[j * 4 + i] = yy;
      cd.gxy_sym[i * 4 + j] = cd.gxy_sym[j * 4 + i] = xy;
    }
    cd.load[i] = quad::local_load(i, poly, rule);
  }
}

void fill_centroid_basis(CellData& cd) {
  const double h = cd.poly.h;
  const double xi = cd.centroid.x - cd.poly.origin.x;
  const double eta = cd.centroid.y - cd.poly.origin.y;
  const double lo_x = 1.0 - xi / h, hi_x = xi / h;
  const double lo_y = 1.0 - eta / h, hi_y = eta / h;
  const double d = 1.0 / h;
  const double hat[4] = {lo_x * lo_y, hi_x * lo_y, hi_x * hi_y, lo_x * hi_y};
  const double dx[4] = {-d * lo_y, d * lo_y, d * hi_y, -d * hi_y};
  const double dy[4] = {-d * lo_x, -d * hi_x, d * hi_x, d * lo_x};
  for (int k = 0; k < 4; ++k) {
    cd.basis_at_centroid[k] = hat[k];
    cd.dx_basis_at_centroid[k] = dx[k];
    cd.dy_basis_at_centroid[k] = dy[k];
  }
}

}  // namespace

FeSpace build_space(geom::GridTopology topo) {
  FeSpace sp;
  sp.rule3 = quad::gauss_legendre_nodes(3);
  sp.rule5 = quad::gauss_legendre_nodes(5);
  sp.topo = std::move(topo);
  const geom::GridTopology& t = sp.topo;
  const int m = t.nodes_per_axis();

  sp.dof_of_node.assign(t.node_count(), -1);
  for (int k = 0; k < t.node_count(); ++k) {
    if (t.node_class[k] != geom::NodeClass::Inactive) {
      sp.dof_of_node[k] = sp.n_dofs++;
      sp.node_of_dof.push_back(k);
    }
  }

  // Full interior cells all share the same local blocks; compute them once
  // from a reference cell of the same size (the blocks are translation
  // invariant).
  CellData reference;
  {
    auto full = geom::clip_cell_values({0.0, 0.0}, t.h,
                                       {-1.0, -1.0, -1.0, -1.0});
    reference.poly = *full;
    fill_local_blocks(reference, sp.rule3);
  }

  for (int cj = 0; cj < t.n; ++cj) {
    for (int ci = 0; ci < t.n; ++ci) {
      bool any_internal = false;
      for (int k = 0; k < 4; ++k)
        any_internal |= t.internal(ci + kCornerDi[k], cj + kCornerDj[k]);
      if (!any_internal) continue;

      CellData cd;
      cd.ci = ci;
      cd.cj = cj;
      cd.cell = t.cell_index(ci, cj);
      bool full_cell = true;
      for (int k = 0; k < 4; ++k) {
        const int node = t.node_index(ci + kCornerDi[k], cj + kCornerDj[k]);
        cd.dofs[k] = sp.dof_of_node[node];
        full_cell &= t.phi[node] < 0.0;
      }

      if (full_cell) {
        cd.poly = reference.poly;
        cd.poly.cell = cd.cell;
        cd.poly.origin = t.node_xy(ci, cj);
        for (auto& v : cd.poly.vertices) {
          v.x += cd.poly.origin.x;
          v.y += cd.poly.origin.y;
        }
        cd.mass = reference.mass;
        cd.gxx = reference.gxx;
        cd.gyy = reference.gyy;
        cd.gxy_sym = reference.gxy_sym;
        cd.load = reference.load;
      } else {
        auto poly = geom::clip_cell(t, ci, cj);
        if (!poly) continue;  // cannot happen with an internal corner
        cd.poly = std::move(*poly);
        fill_local_blocks(cd, sp.rule3);
      }
      cd.area = cd.poly.area();
      cd.centroid = cd.poly.centroid();
      fill_centroid_basis(cd);
      sp.cells.push_back(std::move(cd));
    }
  }

  // Sparsity pattern: active lattice-neighbor pairs, rows in dof order,
  // columns sorted (the lattice walk below emits them in ascending order).
  sp.pattern.n = sp.n_dofs;
  sp.pattern.row_ptr.assign(sp.n_dofs + 1, 0);
  for (int d = 0; d < sp.n_dofs; ++d) {
    const auto [i, j] = sp.node_ij(d);
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        const int ii = i + di, jj = j + dj;
        if (ii < 0 || jj < 0 || ii >= m || jj >= m) continue;
        const int nd = sp.dof_of_node[t.node_index(ii, jj)];
        if (nd >= 0) sp.pattern.col.push_back(nd);
      }
    }
    sp.pattern.row_ptr[d + 1] = static_cast<int>(sp.pattern.col.size());
  }

  for (CellData& cd : sp.cells)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        cd.scatter[i * 4 + j] = sp.pattern.slot(cd.dofs[i], cd.dofs[j]);

  sp.cell_slot.assign(t.cell_count(), -1);
  for (size_t s = 0; s < sp.cells.size(); ++s)
    sp.cell_slot[sp.cells[s].cell] = static_cast<int>(s);

  sp.lumped_mass.assign(sp.n_dofs, 0.0);
  for (const CellData& cd : sp.cells) {
    sp.domain_area += cd.area;
    for (int k = 0; k < 4; ++k) sp.lumped_mass[cd.dofs[k]] += cd.load[k];
  }
  for (double v : sp.lumped_mass) sp.lumped_mass_total += v;
  return sp;
}

SparseOperator assemble_mass(const FeSpace& space, const ScalarSampler& coeff) {
  SparseOperator op(&space.pattern);
  std::vector<double>& v = op.values();
  for (const CellData& cd : space.cells) {
    const double w = coeff(cd);
    if (w == 0.0) continue;
    for (int k = 0; k < 16; ++k) v[cd.scatter[k]] += w * cd.mass[k];
  }
  return op;
}

namespace {

inline double min_eigenvalue(const quad::SymTensor& t) {
  const double mid = 0.5 * (t.xx + t.yy);
  const double rad = std::hypot(0.5 * (t.xx - t.yy), t.xy);
  return mid - rad;
}

void warn_negative_cells(const char* where, int count, int total) {
  if (count > 0)
    std::cerr << "warning: " << where << ": sampled tensor has eigenvalue < -1e-12 in "
              << count << " of " << total << " cells\n";
}

}  // namespace

SparseOperator assemble_stiffness(const FeSpace& space, const TensorSampler& coeff,
                                  int* negative_eigenvalue_cells) {
  SparseOperator op(&space.pattern);
  std::vector<double>& v = op.values();
  int negative = 0;
  for (const CellData& cd : space.cells) {
    const quad::SymTensor t = coeff(cd);
    if (min_eigenvalue(t) < -1e-12) ++negative;
    for (int k = 0; k < 16; ++k)
      v[cd.scatter[k]] +=
          t.xx * cd.gxx[k] + t.xy * cd.gxy_sym[k] + t.yy * cd.gyy[k];
  }
  warn_negative_cells("assemble_stiffness", negative,
                      static_cast<int>(space.cells.size()));
  if (negative_eigenvalue_cells) *negative_eigenvalue_cells = negative;
  return op;
}

std::vector<double> assemble_load(const FeSpace& space, const ScalarSampler& f) {
  std::vector<double> b(space.n_dofs, 0.0);
  for (const CellData& cd : space.cells) {
    const double w = f(cd);
    for (int k = 0; k < 4; ++k) b[cd.dofs[k]] += w * cd.load[k];
  }
  return b;
}

namespace {

quad::BiPolynomial nodal_interpolant(const CellData& cd, const double* values) {
  quad::BiPolynomial c(1, 1);
  for (int k = 0; k < 4; ++k) {
    const quad::BiPolynomial basis = quad::q1_basis_local(k, cd.poly.h);
    c = c + basis.scaled(values[cd.dofs[k]]);
  }
  return c;
}

std::vector<geom::Point> local_vertices(const geom::CutCellPolygon& poly) {
  std::vector<geom::Point> out;
  out.reserve(poly.vertices.size());
  for (const geom::Point& v : poly.vertices)
    out.push_back({v.x - poly.origin.x, v.y - poly.origin.y});
  return out;
}

}  // namespace

SparseOperator assemble_mass_nodal(const FeSpace& space, const double* coeff) {
  SparseOperator op(&space.pattern);
  std::vector<double>& v = op.values();
  for (const CellData& cd : space.cells) {
    const quad::BiPolynomial c = nodal_interpolant(cd, coeff);
    const auto verts = local_vertices(cd.poly);
    for (int i = 0; i < 4; ++i) {
      const quad::BiPolynomial bi = quad::q1_basis_local(i, cd.poly.h);
      for (int j = i; j < 4; ++j) {
        const quad::BiPolynomial f = c * bi * quad::q1_basis_local(j, cd.poly.h);
        const double val = quad::integrate_polygon(
            f, std::span<const geom::Point>(verts), space.rule5);
        v[cd.scatter[i * 4 + j]] += val;
        if (i != j) v[cd.scatter[j * 4 + i]] += val;
      }
    }
  }
  return op;
}

SparseOperator assemble_stiffness_nodal(const FeSpace& space, const double* cxx,
                                        const double* cxy, const double* cyy,
                                        int* negative_eigenvalue_cells) {
  SparseOperator op(&space.pattern);
  std::vector<double>& v = op.values();
  int negative = 0;
  for (const CellData& cd : space.cells) {
    const quad::BiPolynomial txx = nodal_interpolant(cd, cxx);
    const quad::BiPolynomial txy = nodal_interpolant(cd, cxy);
    const quad::BiPolynomial tyy = nodal_interpolant(cd, cyy);
    const quad::SymTensor at_centroid{
        txx.eval(cd.centroid.x - cd.poly.origin.x, cd.centroid.y - cd.poly.origin.y),
        txy.eval(cd.centroid.x - cd.poly.origin.x, cd.centroid.y - cd.poly.origin.y),
        tyy.eval(cd.centroid.x - cd.poly.origin.x, cd.centroid.y - cd.poly.origin.y)};
    if (min_eigenvalue(at_centroid) < -1e-12) ++negative;
    const auto verts = local_vertices(cd.poly);
    std::array<quad::BiPolynomial, 4> gx, gy;
    for (int k = 0; k < 4; ++k) {
      const quad::BiPolynomial basis = quad::q1_basis_local(k, cd.poly.h);
      gx[k] = basis.derivative_x();
      gy[k] = basis.derivative_y();
    }
    for (int i = 0; i < 4; ++i) {
      for (int j = i; j < 4; ++j) {
        const quad::BiPolynomial f = txx * (gx[i] * gx[j]) +
                                     txy * ((gx[i] * gy[j]) + (gy[i] * gx[j])) +
                                     tyy * (gy[i] * gy[j]);
        const double val = quad::integrate_polygon(
            f, std::span<const geom::Point>(verts), space.rule5);
        v[cd.scatter[i * 4 + j]] += val;
        if (i != j) v[cd.scatter[j * 4 + i]] += val;
      }
    }
  }
  warn_negative_cells("assemble_stiffness_nodal", negative,
                      static_cast<int>(space.cells.size()));
  if (negative_eigenvalue_cells) *negative_eigenvalue_cells = negative;
  return op;
}

std::vector<double> assemble_load_nodal(const FeSpace& space, const double* f) {
  std::vector<double> b(space.n_dofs, 0.0);
  for (const CellData& cd : space.cells) {
    const quad::BiPolynomial fh = nodal_interpolant(cd, f);
    const auto verts = local_vertices(cd.poly);
    for (int k = 0; k < 4; ++k) {
      b[cd.dofs[k]] += quad::integrate_polygon(
          fh * quad::q1_basis_local(k, cd.poly.h),
          std::span<const geom::Point>(verts), space.rule5);
    }
  }
  return b;
}

std::vector<double> assemble_boundary_flux_load(
    const FeSpace& space, const std::function<double(geom::Point, Vec2)>& flux) {
  std::vector<double> b(space.n_dofs, 0.0);
  const quad::EdgeRule& rule = space.rule3;
  for (const CellData& cd : space.cells) {
    if (!cd.poly.has_cut) continue;
    const geom::Point a = cd.poly.cut_a;
    const geom::Point bb = cd.poly.cut_b;
    const double len = std::hypot(bb.x - a.x, bb.y - a.y);
    if (len == 0.0) continue;
    // The chord runs A -> B in the counterclockwise walk, so (dy, -dx)
    // points outward.
    const Vec2 normal{(bb.y - a.y) / len, -(bb.x - a.x) / len};
    for (int s = 0; s < rule.q; ++s) {
      const double t = rule.nodes[s];
      const geom::Point p{a.x + t * (bb.x - a.x), a.y + t * (bb.y - a.y)};
      const double g = flux(p, normal) * rule.weights[s] * len;
      const double xi = p.x - cd.poly.origin.x, eta = p.y - cd.poly.origin.y;
      const double h = cd.poly.h;
      const double lo_x = 1.0 - xi / h, hi_x = xi / h;
      const double lo_y = 1.0 - eta / h, hi_y = eta / h;
      const double hat[4] = {lo_x * lo_y, hi_x * lo_y, hi_x * hi_y, lo_x * hi_y};
      for (int k = 0; k < 4; ++k) b[cd.dofs[k]] += g * hat[k];
    }
  }
  return b;
}

Vec2 cell_gradient_at(const CellData& cell, const double* u, geom::Point p) {
  const double h = cell.poly.h;
  const double xi = p.x - cell.poly.origin.x, eta = p.y - cell.poly.origin.y;
  const double lo_x = 1.0 - xi / h, hi_x = xi / h;
  const double lo_y = 1.0 - eta / h, hi_y = eta / h;
  const double d = 1.0 / h;
  const double dx[4] = {-d * lo_y, d * lo_y, d * hi_y, -d * hi_y};
  const double dy[4] = {-d * lo_x, -d * hi_x, d * hi_x, d * lo_x};
  Vec2 g;
  for (int k = 0; k < 4; ++k) {
    const double uk = u[cell.dofs[k]];
    g.x += uk * dx[k];
    g.y += uk * dy[k];
  }
  return g;
}

double cell_value_at(const CellData& cell, const double* u, geom::Point p) {
  const double h = cell.poly.h;
  const double xi = p.x - cell.poly.origin.x, eta = p.y - cell.poly.origin.y;
  const double lo_x = 1.0 - xi / h, hi_x = xi / h;
  const double lo_y = 1.0 - eta / h, hi_y = eta / h;
  const double hat[4] = {lo_x * lo_y, hi_x * lo_y, hi_x * hi_y, lo_x * hi_y};
  double val = 0.0;
  for (int k = 0; k < 4; ++k) val += u[cell.dofs[k]] * hat[k];
  return val;
}

void project_zero_mean(const FeSpace& space, std::vector<double>& v) {
  double dot = 0.0;
  for (int i = 0; i < space.n_dofs; ++i) dot += space.lumped_mass[i] * v[i];
  const double mean = dot / space.lumped_mass_total;
  for (double& x : v) x -= mean;
}

void project_compatible(const FeSpace& space, std::vector<double>& b) {
  double sum = 0.0;
  for (double x : b) sum += x;
  const double scale = sum / space.lumped_mass_total;
  for (int i = 0; i < space.n_dofs; ++i) b[i] -= scale * space.lumped_mass[i];
}

NodalField solve_neumann_zero_mean(const SparseOperator& K, std::vector<double> b,
                                   const FeSpace& space, SolveOptions options) {
  LinearSolver solver(space, options);
  NodalField u(1, space.n_dofs);
  std::vector<double> x = solver.solve_zero_mean(K, std::move(b));
  std::copy(x.begin(), x.end(), u.data.begin());
  return u;
}

}  // namespace bionet::fem
