#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bionet/fem.hpp"

namespace bionet::fem {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

[[noreturn]] void fail(const char* what, double residual, int iterations) {
  std::ostringstream msg;
  msg << what << " (relative residual " << residual << " after " << iterations
      << " iterations)";
  throw std::runtime_error(msg.str());
}

}  // namespace

struct LinearSolver::Impl {
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analyzed = false;
  std::vector<int> column_zero_slots;  // slots of entries in column 0
  std::vector<double> factorized_values;  // skip refactorizing identical matrices
  std::vector<double> equilibration;      // symmetric diagonal scaling

  // Factor S A S with S = diag(|a_ii|^-1/2): cut cells leave the raw matrix
  // badly scaled (ghost rows carry slivers of support) and equilibration
  // restores most of the lost accuracy.
  void factorize(const FeSpace& space, const std::vector<double>& values) {
    if (analyzed && values == factorized_values) return;
    const SparsityPattern& p = space.pattern;
    equilibration.assign(p.n, 1.0);
    for (int r = 0; r < p.n; ++r)
      for (int k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k)
        if (p.col[k] == r && std::abs(values[k]) > 0.0)
          equilibration[r] = 1.0 / std::sqrt(std::abs(values[k]));
    std::vector<double> scaled(values.size());
    for (int r = 0; r < p.n; ++r)
      for (int k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k)
        scaled[k] = values[k] * equilibration[r] * equilibration[p.col[k]];
    // The CSR arrays of a symmetric matrix read directly as compressed
    // column storage of the same matrix.
    Eigen::Map<const SpMat> map(p.n, p.n, p.nnz(), p.row_ptr.data(), p.col.data(),
                                scaled.data());
    SpMat a(map);
    if (!analyzed) {
      ldlt.analyzePattern(a);
      analyzed = true;
    }
    ldlt.factorize(a);
    if (ldlt.info() != Eigen::Success) {
      factorized_values.clear();
      throw std::runtime_error("LinearSolver: sparse LDLT factorization failed");
    }
    factorized_values = values;
  }

  std::vector<double> backsolve(const FeSpace& space, const double* b) {
    const int n = space.pattern.n;
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = b[i] * equilibration[i];
    Eigen::VectorXd y = ldlt.solve(rhs);
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = y[i] * equilibration[i];
    return x;
  }

  // Direct solve with one step of iterative refinement against the exact
  // (unscaled) matrix values.
  std::vector<double> solve_refined(const FeSpace& space,
                                    const std::vector<double>& values,
                                    const std::vector<double>& b) {
    const SparsityPattern& p = space.pattern;
    std::vector<double> x = backsolve(space, b.data());
    std::vector<double> r(p.n);
    for (int row = 0; row < p.n; ++row) {
      double acc = 0.0;
      for (int k = p.row_ptr[row]; k < p.row_ptr[row + 1]; ++k)
        acc += values[k] * x[p.col[k]];
      r[row] = b[row] - acc;
    }
    const std::vector<double> dx = backsolve(space, r.data());
    for (int i = 0; i < p.n; ++i) x[i] += dx[i];
    return x;
  }
};

LinearSolver::LinearSolver(const FeSpace& space, SolveOptions options)
    : space_(&space), options_(options), impl_(std::make_unique<Impl>()) {
  const SparsityPattern& p = space.pattern;
  for (int k = 0; k < p.nnz(); ++k)
    if (p.col[k] == 0) impl_->column_zero_slots.push_back(k);
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

namespace {

struct PcgWorkspace {
  std::vector<double> r, z, p, q;
};

// Jacobi-preconditioned conjugate gradient. When `deflate` is set the
// residual is kept orthogonal to the constant kernel each iteration, which
// makes the singular pure-Neumann system behave like a definite one.
void pcg(const SparseOperator& A, const std::vector<double>& b,
         std::vector<double>& x, bool deflate, double tol, int max_iter,
         PcgWorkspace& ws) {
  const int n = A.rows();
  const double b_norm = norm(b);
  if (b_norm == 0.0) {
    x.assign(n, 0.0);
    return;
  }
  std::vector<double> inv_diag = A.diagonal();
  for (double& d : inv_diag) {
    if (d <= 0.0) throw std::runtime_error("pcg: nonpositive diagonal entry");
    d = 1.0 / d;
  }

  ws.r.resize(n);
  ws.z.resize(n);
  ws.p.resize(n);
  ws.q.resize(n);
  auto remove_mean = [n](std::vector<double>& v) {
    double s = 0.0;
    for (double u : v) s += u;
    s /= n;
    for (double& u : v) u -= s;
  };

  A.matvec(x.data(), ws.r.data());
  for (int i = 0; i < n; ++i) ws.r[i] = b[i] - ws.r[i];
  if (deflate) remove_mean(ws.r);

  double rz = 0.0;
  for (int i = 0; i < n; ++i) {
    ws.z[i] = inv_diag[i] * ws.r[i];
    rz += ws.r[i] * ws.z[i];
  }
  ws.p = ws.z;

  double res = norm(ws.r) / b_norm;
  if (res <= tol) return;
  for (int it = 1; it <= max_iter; ++it) {
    A.matvec(ws.p.data(), ws.q.data());
    const double pq = dot(ws.p, ws.q);
    if (!(pq > 0.0)) fail("pcg: operator is not positive definite", res, it);
    const double alpha = rz / pq;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * ws.p[i];
      ws.r[i] -= alpha * ws.q[i];
    }
    if (deflate) remove_mean(ws.r);
    res = norm(ws.r) / b_norm;
    if (res <= tol) return;
    double rz_new = 0.0;
    for (int i = 0; i < n; ++i) {
      ws.z[i] = inv_diag[i] * ws.r[i];
      rz_new += ws.r[i] * ws.z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) ws.p[i] = ws.z[i] + beta * ws.p[i];
  }
  fail("pcg: no convergence within the iteration limit", res, max_iter);
}

}  // namespace

std::vector<std::vector<double>> LinearSolver::solve_zero_mean_batch(
    const SparseOperator& K, std::vector<std::vector<double>> bs,
    const std::vector<const double*>& warm_starts) {
  const int n = space_->n_dofs;
  if (n == 0 || K.rows() != n)
    throw std::invalid_argument("solve_zero_mean: dimension mismatch");
  {
    double diag_max = 0.0;
    for (double d : K.diagonal()) diag_max = std::max(diag_max, std::abs(d));
    if (diag_max == 0.0)
      throw std::runtime_error("solve_zero_mean: zero operator");
  }
  bool all_zero = true;
  for (auto& b : bs) {
    project_compatible(*space_, b);
    for (double v : b) all_zero &= v == 0.0;
  }

  const bool direct = options_.strategy == SolveOptions::Strategy::Direct ||
                      (options_.strategy == SolveOptions::Strategy::Auto &&
                       n <= 150000);
  std::vector<std::vector<double>> xs(bs.size());

  if (direct && !all_zero) {
    // Pin dof 0 to make the matrix definite: with a compatible right side
    // the pinned solution solves the full singular system exactly, and the
    // final projection picks the zero-mean representative.
    std::vector<double> pinned = K.values();
    const SparsityPattern& pat = space_->pattern;
    for (int k = pat.row_ptr[0]; k < pat.row_ptr[1]; ++k) pinned[k] = 0.0;
    for (int k : impl_->column_zero_slots) pinned[k] = 0.0;
    pinned[pat.slot(0, 0)] = 1.0;
    impl_->factorize(*space_, pinned);

    for (size_t s = 0; s < bs.size(); ++s) {
      std::vector<double> rhs = bs[s];
      rhs[0] = 0.0;
      xs[s] = impl_->solve_refined(*space_, pinned, rhs);
    }
  } else {
    PcgWorkspace ws;
    const int max_iter = options_.max_iterations > 0
                             ? options_.max_iterations
                             : 400 + 16 * static_cast<int>(std::sqrt(double(n))) +
                                   2 * n / 100;
    for (size_t s = 0; s < bs.size(); ++s) {
      const double* warm = s < warm_starts.size() ? warm_starts[s] : nullptr;
      xs[s].assign(n, 0.0);
      if (warm) xs[s].assign(warm, warm + n);
      pcg(K, bs[s], xs[s], /*deflate=*/true, options_.tol, max_iter, ws);
    }
  }

  for (size_t s = 0; s < bs.size(); ++s) {
    if (xs[s].empty()) xs[s].assign(n, 0.0);
    project_zero_mean(*space_, xs[s]);
    // Postcondition check, both paths: ||K u - b|| <= tol * ||b||.
    std::vector<double> res = K.matvec(xs[s]);
    double rn = 0.0, bn = 0.0;
    for (int i = 0; i < n; ++i) {
      rn += (res[i] - bs[s][i]) * (res[i] - bs[s][i]);
      bn += bs[s][i] * bs[s][i];
    }
    if (bn > 0.0 && std::sqrt(rn) > 10.0 * options_.tol * std::sqrt(bn))
      fail("solve_zero_mean: residual above tolerance", std::sqrt(rn / bn), 0);
  }
  return xs;
}

std::vector<double> LinearSolver::solve_zero_mean(const SparseOperator& K,
                                                  std::vector<double> b,
                                                  const double* warm_start) {
  std::vector<std::vector<double>> bs;
  bs.push_back(std::move(b));
  return std::move(
      solve_zero_mean_batch(K, std::move(bs), {warm_start}).front());
}

std::vector<std::vector<double>> LinearSolver::solve_spd_batch(
    const SparseOperator& A, const std::vector<std::vector<double>>& bs,
    const std::vector<const double*>& warm_starts) {
  const int n = space_->n_dofs;
  if (A.rows() != n) throw std::invalid_argument("solve_spd: dimension mismatch");
  const bool direct = options_.strategy == SolveOptions::Strategy::Direct ||
                      (options_.strategy == SolveOptions::Strategy::Auto &&
                       n <= 150000);
  std::vector<std::vector<double>> xs(bs.size());
  if (direct) {
    impl_->factorize(*space_, A.values());
    for (size_t s = 0; s < bs.size(); ++s)
      xs[s] = impl_->solve_refined(*space_, A.values(), bs[s]);
  } else {
    PcgWorkspace ws;
    const int max_iter = options_.max_iterations > 0
                             ? options_.max_iterations
                             : 400 + 16 * static_cast<int>(std::sqrt(double(n))) +
                                   2 * n / 100;
    for (size_t s = 0; s < bs.size(); ++s) {
      const double* warm = s < warm_starts.size() ? warm_starts[s] : nullptr;
      xs[s].assign(n, 0.0);
      if (warm) xs[s].assign(warm, warm + n);
      pcg(A, bs[s], xs[s], /*deflate=*/false, options_.tol, max_iter, ws);
    }
  }
  return xs;
}

std::vector<double> LinearSolver::solve_spd(const SparseOperator& A,
                                            const std::vector<double>& b,
                                            const double* warm_start) {
  return std::move(solve_spd_batch(A, {b}, {warm_start}).front());
}

}  // namespace bionet::fem
