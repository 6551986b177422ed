#pragma once

// Q1 finite element space on the active nodes of a cut-cell topology:
// per-cell geometric matrices (mass, gradient products, loads) computed once
// with the exact polygon quadrature, sparse assembly over a shared pattern,
// and the zero-mean-constrained pure-Neumann solver.

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "bionet/geometry.hpp"
#include "bionet/quadrature.hpp"

namespace bionet::fem {

struct SparsityPattern {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;

  int nnz() const { return static_cast<int>(col.size()); }
  /// Index of entry (r, c) in the value array; throws if absent.
  int slot(int r, int c) const;
};

/// Symmetric sparse matrix over the active degrees of freedom. The pattern
/// is owned by the FeSpace and shared between all operators assembled on it.
class SparseOperator {
public:
  SparseOperator() = default;
  explicit SparseOperator(const SparsityPattern* pattern)
      : pattern_(pattern), values_(pattern->nnz(), 0.0) {}

  int rows() const { return pattern_ ? pattern_->n : 0; }
  const SparsityPattern& pattern() const { return *pattern_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  void set_zero() { values_.assign(values_.size(), 0.0); }

  void matvec(const double* x, double* y) const;
  std::vector<double> matvec(const std::vector<double>& x) const;
  std::vector<double> diagonal() const;

  /// this += s * other (same pattern required).
  void add_scaled(const SparseOperator& other, double s);

private:
  const SparsityPattern* pattern_ = nullptr;
  std::vector<double> values_;
};

/// Field over the active dofs; 1 component (p, sigma, scalar C) or
/// 3 components (tensor C stored as C11, C12, C22, component-major).
struct NodalField {
  int components = 1;
  int n = 0;
  std::vector<double> data;

  NodalField() = default;
  NodalField(int comps, int n_dofs, double fill = 0.0)
      : components(comps), n(n_dofs), data(static_cast<size_t>(comps) * n_dofs, fill) {}

  double* comp(int c) { return data.data() + static_cast<size_t>(c) * n; }
  const double* comp(int c) const { return data.data() + static_cast<size_t>(c) * n; }
  double& at(int c, int i) { return data[static_cast<size_t>(c) * n + i]; }
  double at(int c, int i) const { return data[static_cast<size_t>(c) * n + i]; }
};

/// Frobenius norm of the symmetric 2x2 tensor (c11, c12, c22); the
/// off-diagonal entry is stored once and counted twice.
inline double frobenius(double c11, double c12, double c22) {
  return std::sqrt(c11 * c11 + 2.0 * c12 * c12 + c22 * c22);
}

/// Everything the assembly needs per contributing cell, precomputed once.
struct CellData {
  int ci = 0, cj = 0;
  int cell = 0;
  std::array<int, 4> dofs{};   // counterclockwise from the lower-left corner
  geom::CutCellPolygon poly;
  double area = 0.0;
  geom::Point centroid{};
  std::array<double, 4> basis_at_centroid{};
  std::array<double, 4> dx_basis_at_centroid{};
  std::array<double, 4> dy_basis_at_centroid{};
  std::array<double, 16> mass{};     // integral of phi_i phi_j
  std::array<double, 16> gxx{};      // integral of dx phi_i dx phi_j
  std::array<double, 16> gyy{};      // integral of dy phi_i dy phi_j
  std::array<double, 16> gxy_sym{};  // integral of dx phi_i dy phi_j + dy phi_i dx phi_j
  std::array<double, 4> load{};      // integral of phi_i
  std::array<int, 16> scatter{};     // slots into the shared value array
};

struct FeSpace {
  geom::GridTopology topo;
  std::vector<int> dof_of_node;   // node index -> dof, -1 if inactive
  std::vector<int> node_of_dof;
  int n_dofs = 0;
  std::vector<CellData> cells;    // contributing cells, row-major cell order
  std::vector<int> cell_slot;     // cell index -> index into cells, -1 if absent
  SparsityPattern pattern;
  std::vector<double> lumped_mass;   // row sums of the unit mass matrix
  double lumped_mass_total = 0.0;    // equals area(Omega_h)
  double domain_area = 0.0;          // sum of polygon areas
  quad::EdgeRule rule3;
  quad::EdgeRule rule5;

  int dof_at(int i, int j) const { return dof_of_node[topo.node_index(i, j)]; }
  std::pair<int, int> node_ij(int dof) const {
    const int k = node_of_dof[dof];
    return {k % topo.nodes_per_axis(), k / topo.nodes_per_axis()};
  }
};

/// Build the space: dof numbering over active nodes in row-major lattice
/// order, cell cache, sparsity pattern and lumped mass.
FeSpace build_space(geom::GridTopology topo);

using ScalarSampler = std::function<double(const CellData&)>;
using TensorSampler = std::function<quad::SymTensor(const CellData&)>;

/// M_ij = sum over cells of coeff(cell) * local mass block.
SparseOperator assemble_mass(const FeSpace& space, const ScalarSampler& coeff);

/// K_ij = sum over cells of the local stiffness block with the sampled
/// symmetric tensor held constant per cell. If `negative_eigenvalue_cells`
/// is given it receives the number of cells whose sampled tensor has an
/// eigenvalue below -1e-12 (a diagnostic, also warned to stderr).
SparseOperator assemble_stiffness(const FeSpace& space, const TensorSampler& coeff,
                                  int* negative_eigenvalue_cells = nullptr);

/// b_i = sum over cells of f(cell) * integral of phi_i.
std::vector<double> assemble_load(const FeSpace& space, const ScalarSampler& f);

/// Nodal-coefficient variants: the coefficient is the Q1 interpolant of the
/// given dof values and the products are integrated exactly with the 5-point
/// rule (sensitivity-study path; the centroid samplers above are the default).
SparseOperator assemble_mass_nodal(const FeSpace& space, const double* coeff);
SparseOperator assemble_stiffness_nodal(const FeSpace& space, const double* cxx,
                                        const double* cxy, const double* cyy,
                                        int* negative_eigenvalue_cells = nullptr);
/// b_i = integral of the Q1 interpolant of the nodal values against phi_i.
std::vector<double> assemble_load_nodal(const FeSpace& space, const double* f);

struct Vec2 {
  double x = 0.0, y = 0.0;
};

/// b_i += integral over the boundary chords (the A-B edge of every cut cell)
/// of flux(x, n) * phi_i, with the 3-point rule per chord; n is the outward
/// unit normal of the chord. Used for manufactured problems with
/// inhomogeneous Neumann data.
std::vector<double> assemble_boundary_flux_load(
    const FeSpace& space, const std::function<double(geom::Point, Vec2)>& flux);

/// Gradient of the Q1 interpolant of u restricted to a cell, evaluated at a
/// point of that cell (bilinear in each coordinate).
Vec2 cell_gradient_at(const CellData& cell, const double* u, geom::Point p);
/// Value of the Q1 interpolant at a point of the cell.
double cell_value_at(const CellData& cell, const double* u, geom::Point p);

struct SolveOptions {
  enum class Strategy { Auto, Direct, Pcg };
  Strategy strategy = Strategy::Auto;
  double tol = 1e-10;   // relative residual, both paths
  int max_iterations = 0;   // 0 = 40 * sqrt(n) + 200
};

/// Linear solves over one FeSpace pattern. Direct path: sparse LDLT with the
/// symbolic factorization reused across calls. Iterative path: Jacobi-
/// preconditioned conjugate gradient, deflated against the constant kernel
/// for the singular Neumann systems, with optional warm starts.
class LinearSolver {
public:
  LinearSolver(const FeSpace& space, SolveOptions options = {});
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  /// Solve the singular pure-Neumann system K u = b: the right side is
  /// projected onto the compatible subspace (b -= (1'b / 1'm) m), the
  /// system solved with the constant kernel removed, and the returned u
  /// has zero lumped-mass mean.
  std::vector<double> solve_zero_mean(const SparseOperator& K, std::vector<double> b,
                                      const double* warm_start = nullptr);

  /// Solve a symmetric positive definite system.
  std::vector<double> solve_spd(const SparseOperator& A, const std::vector<double>& b,
                                const double* warm_start = nullptr);

  /// Batched variants sharing one factorization of the operator (the direct
  /// path factors once and back-substitutes per right side).
  std::vector<std::vector<double>> solve_zero_mean_batch(
      const SparseOperator& K, std::vector<std::vector<double>> bs,
      const std::vector<const double*>& warm_starts = {});
  std::vector<std::vector<double>> solve_spd_batch(
      const SparseOperator& A, const std::vector<std::vector<double>>& bs,
      const std::vector<const double*>& warm_starts = {});

  const SolveOptions& options() const { return options_; }

private:
  struct Impl;
  const FeSpace* space_;
  SolveOptions options_;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper around LinearSolver::solve_zero_mean.
NodalField solve_neumann_zero_mean(const SparseOperator& K, std::vector<double> b,
                                   const FeSpace& space, SolveOptions options = {});

/// Subtract the lumped-mass-weighted mean: v -= (m'v / m'1) 1.
void project_zero_mean(const FeSpace& space, std::vector<double>& v);
/// Project onto the compatible right-hand sides: b -= (1'b / 1'm) m.
void project_compatible(const FeSpace& space, std::vector<double>& b);

}  // namespace bionet::fem
