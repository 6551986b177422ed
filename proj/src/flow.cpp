#include "bionet/flow.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bionet::flow {

double EntropyGenerator::phi2(double p) const {
  switch (kind) {
    case Entropy::Quartic:
      return p * p;
    case Entropy::Fisher:
      if (p <= -1.0) throw std::domain_error("fisher entropy: p <= -1");
      return 1.0 / (p + 1.0);
    case Entropy::Mixed:
      if (p <= -1.0) throw std::domain_error("mixed entropy: p <= -1");
      return w_quartic * p * p + w_fisher / (p + 1.0);
    case Entropy::Quadratic:
      return 1.0;
  }
  throw std::logic_error("unreachable");
}

double EntropyGenerator::phi3(double p) const {
  switch (kind) {
    case Entropy::Quartic:
      return 2.0 * p;
    case Entropy::Fisher:
      if (p <= -1.0) throw std::domain_error("fisher entropy: p <= -1");
      return -1.0 / ((p + 1.0) * (p + 1.0));
    case Entropy::Mixed:
      if (p <= -1.0) throw std::domain_error("mixed entropy: p <= -1");
      return w_quartic * 2.0 * p - w_fisher / ((p + 1.0) * (p + 1.0));
    case Entropy::Quadratic:
      return 0.0;
  }
  throw std::logic_error("unreachable");
}

double phi2(const EntropyGenerator& gen, double p) { return gen.phi2(p); }
double phi3(const EntropyGenerator& gen, double p) { return gen.phi3(p); }

std::string domain_name(DomainShape d) {
  switch (d) {
    case DomainShape::Circle:
      return "circle";
    case DomainShape::Leaf:
      return "leaf";
    case DomainShape::RotatedLeaf:
      return "rotated_leaf";
  }
  return "?";
}

int SimParams::max_steps() const {
  if (T <= 0.0) return 0;
  return static_cast<int>(std::ceil(T / dt_value() - 1e-9));
}

geom::Point SimParams::source_center() const {
  if (source_x && source_y) return {*source_x, *source_y};
  geom::Point c = domain == DomainShape::Circle ? geom::Point{0.5, 0.5}
                                                : geom::Point{0.5, 0.2};
  if (domain == DomainShape::RotatedLeaf)
    c = geom::rotate_about(c, {0.5, 0.5}, theta);
  if (source_x) c.x = *source_x;
  if (source_y) c.y = *source_y;
  return c;
}

geom::LevelSet SimParams::level_set() const {
  switch (domain) {
    case DomainShape::Circle:
      return geom::LevelSet::circle({0.5, 0.5}, 0.45);
    case DomainShape::Leaf:
      return geom::LevelSet::leaf({0.4, 0.5}, {0.6, 0.5}, 0.4);
    case DomainShape::RotatedLeaf:
      return geom::LevelSet::rotated_leaf({0.4, 0.5}, {0.6, 0.5}, 0.4, theta);
  }
  throw std::logic_error("unreachable");
}

double SimParams::source(double x, double y) const {
  const geom::Point c = source_center();
  const double dx = x - c.x, dy = y - c.y;
  return source_scale * std::exp(-omega * (dx * dx + dy * dy));
}

ScaledParams scale_parameters(double d, double c, double nu) {
  if (c == 0.0) throw std::invalid_argument("scale_parameters: c must be nonzero");
  return {d / c, nu / (c * c)};
}

namespace {

struct CentroidSample {
  double c11 = 0.0, c12 = 0.0, c22 = 0.0;  // scalar mode: c11 only
  double p = 0.0;
  fem::Vec2 grad_p{};
  fem::Vec2 grad_sigma{};
};

CentroidSample sample_cell(const fem::CellData& cd, const fem::NodalField& c,
                           const fem::NodalField* p, const fem::NodalField* sigma) {
  CentroidSample s;
  for (int k = 0; k < 4; ++k) {
    const int d = cd.dofs[k];
    const double w = cd.basis_at_centroid[k];
    s.c11 += w * c.comp(0)[d];
    if (c.components == 3) {
      s.c12 += w * c.comp(1)[d];
      s.c22 += w * c.comp(2)[d];
    }
    if (p) {
      const double pv = p->comp(0)[d];
      s.p += w * pv;
      s.grad_p.x += cd.dx_basis_at_centroid[k] * pv;
      s.grad_p.y += cd.dy_basis_at_centroid[k] * pv;
    }
    if (sigma) {
      const double sv = sigma->comp(0)[d];
      s.grad_sigma.x += cd.dx_basis_at_centroid[k] * sv;
      s.grad_sigma.y += cd.dy_basis_at_centroid[k] * sv;
    }
  }
  if (c.components == 1) s.c22 = s.c11;
  return s;
}

quad::SymTensor conductivity_tensor(const CentroidSample& s, double r,
                                    bool tensor_mode) {
  if (tensor_mode) return {s.c11 + r, s.c12, s.c22 + r};
  return {s.c11 + r, 0.0, s.c11 + r};
}

double frobenius_of(const CentroidSample& s, bool tensor_mode) {
  if (tensor_mode) return fem::frobenius(s.c11, s.c12, s.c22);
  return std::abs(s.c11);
}

quad::BiPolynomial local_interpolant(const fem::CellData& cd, const double* u) {
  quad::BiPolynomial out(1, 1);
  for (int k = 0; k < 4; ++k)
    out = out + quad::q1_basis_local(k, cd.poly.h).scaled(u[cd.dofs[k]]);
  return out;
}

std::vector<geom::Point> local_vertices(const geom::CutCellPolygon& poly) {
  std::vector<geom::Point> out;
  out.reserve(poly.vertices.size());
  for (const geom::Point& v : poly.vertices)
    out.push_back({v.x - poly.origin.x, v.y - poly.origin.y});
  return out;
}

// Gradient flux polynomial grad p . (C + rI) grad p with Q1-interpolated
// tensor components, in cell-local coordinates.
quad::BiPolynomial flux_polynomial(const fem::CellData& cd, const SimParams& params,
                                   const fem::NodalField& c,
                                   const quad::BiPolynomial& px,
                                   const quad::BiPolynomial& py) {
  const quad::BiPolynomial r = quad::BiPolynomial::constant(params.r);
  if (params.tensor_mode) {
    const quad::BiPolynomial cxx = local_interpolant(cd, c.comp(0)) + r;
    const quad::BiPolynomial cxy = local_interpolant(cd, c.comp(1));
    const quad::BiPolynomial cyy = local_interpolant(cd, c.comp(2)) + r;
    return px * (cxx * px + cxy * py) + py * (cxy * px + cyy * py);
  }
  const quad::BiPolynomial iso = local_interpolant(cd, c.comp(0)) + r;
  return iso * (px * px + py * py);
}

fem::SparseOperator assemble_pressure_operator(const fem::FeSpace& space,
                                               const SimParams& params,
                                               const fem::NodalField& c) {
  if (params.nodal_coefficients) {
    std::vector<double> cxx(space.n_dofs), cxy(space.n_dofs, 0.0), cyy(space.n_dofs);
    for (int i = 0; i < space.n_dofs; ++i) {
      cxx[i] = c.comp(0)[i] + params.r;
      cyy[i] = (c.components == 3 ? c.comp(2)[i] : c.comp(0)[i]) + params.r;
      if (c.components == 3) cxy[i] = c.comp(1)[i];
    }
    return fem::assemble_stiffness_nodal(space, cxx.data(), cxy.data(), cyy.data());
  }
  return fem::assemble_stiffness(space, [&](const fem::CellData& cd) {
    const CentroidSample s = sample_cell(cd, c, nullptr, nullptr);
    return conductivity_tensor(s, params.r, params.tensor_mode);
  });
}

}  // namespace

namespace {

std::vector<double> assemble_source_load(const fem::FeSpace& space,
                                         const SimParams& params) {
  if (params.nodal_coefficients) {
    std::vector<double> s(space.n_dofs);
    for (int d = 0; d < space.n_dofs; ++d) {
      const auto [i, j] = space.node_ij(d);
      const geom::Point xy = space.topo.node_xy(i, j);
      s[d] = params.source(xy.x, xy.y);
    }
    return fem::assemble_load_nodal(space, s.data());
  }
  return fem::assemble_load(space, [&](const fem::CellData& cd) {
    return params.source(cd.centroid.x, cd.centroid.y);
  });
}

}  // namespace

fem::NodalField solve_pressure(const fem::FeSpace& space, const SimParams& params,
                               const fem::NodalField& c, fem::LinearSolver& solver,
                               const fem::SparseOperator* stiffness,
                               const double* warm) {
  fem::SparseOperator local;
  if (!stiffness) {
    local = assemble_pressure_operator(space, params, c);
    stiffness = &local;
  }
  std::vector<double> b = assemble_source_load(space, params);
  fem::NodalField p(1, space.n_dofs);
  std::vector<double> x = solver.solve_zero_mean(*stiffness, std::move(b), warm);
  std::copy(x.begin(), x.end(), p.data.begin());
  return p;
}

fem::NodalField solve_sigma(const fem::FeSpace& space, const SimParams& params,
                            const fem::NodalField& c, const fem::NodalField& p,
                            fem::LinearSolver& solver,
                            const fem::SparseOperator* stiffness,
                            const double* warm) {
  fem::SparseOperator local;
  if (!stiffness) {
    local = assemble_pressure_operator(space, params, c);
    stiffness = &local;
  }
  std::vector<double> b;
  if (params.nodal_coefficients) {
    // Q1-interpolated phi'''(p) against the exact per-cell flux polynomial.
    std::vector<double> phi3_nodal(space.n_dofs);
    for (int d = 0; d < space.n_dofs; ++d)
      phi3_nodal[d] = params.entropy.phi3(p.comp(0)[d]);
    b.assign(space.n_dofs, 0.0);
    for (const fem::CellData& cd : space.cells) {
      const quad::BiPolynomial ph = local_interpolant(cd, p.comp(0));
      const quad::BiPolynomial g =
          local_interpolant(cd, phi3_nodal.data()) *
          flux_polynomial(cd, params, c, ph.derivative_x(), ph.derivative_y());
      const auto verts = local_vertices(cd.poly);
      for (int k = 0; k < 4; ++k)
        b[cd.dofs[k]] += quad::integrate_polygon(
            g * quad::q1_basis_local(k, cd.poly.h),
            std::span<const geom::Point>(verts), space.rule5);
    }
  } else {
    b = fem::assemble_load(space, [&](const fem::CellData& cd) {
      const CentroidSample s = sample_cell(cd, c, &p, nullptr);
      const quad::SymTensor m = conductivity_tensor(s, params.r, params.tensor_mode);
      const double flux = s.grad_p.x * (m.xx * s.grad_p.x + m.xy * s.grad_p.y) +
                          s.grad_p.y * (m.xy * s.grad_p.x + m.yy * s.grad_p.y);
      return params.entropy.phi3(s.p) * flux;
    });
  }
  fem::NodalField sig(1, space.n_dofs);
  std::vector<double> x = solver.solve_zero_mean(*stiffness, std::move(b), warm);
  std::copy(x.begin(), x.end(), sig.data.begin());
  return sig;
}

double energy(const fem::FeSpace& space, const SimParams& params,
              const fem::NodalField& c, const fem::NodalField& p) {
  const double half_d2 = 0.5 * params.d_tilde * params.d_tilde;
  double total = 0.0;
  for (const fem::CellData& cd : space.cells) {
    const CentroidSample s = sample_cell(cd, c, &p, nullptr);
    // ||grad C||^2 with the off-diagonal tensor component counted twice.
    double grad_c2 = 0.0;
    for (int comp = 0; comp < c.components; ++comp) {
      fem::Vec2 g{};
      for (int k = 0; k < 4; ++k) {
        const double v = c.comp(comp)[cd.dofs[k]];
        g.x += cd.dx_basis_at_centroid[k] * v;
        g.y += cd.dy_basis_at_centroid[k] * v;
      }
      const double mult = (c.components == 3 && comp == 1) ? 2.0 : 1.0;
      grad_c2 += mult * (g.x * g.x + g.y * g.y);
    }
    const quad::SymTensor m = conductivity_tensor(s, params.r, params.tensor_mode);
    const double activation =
        params.entropy.phi2(s.p) *
        (s.grad_p.x * (m.xx * s.grad_p.x + m.xy * s.grad_p.y) +
         s.grad_p.y * (m.xy * s.grad_p.x + m.yy * s.grad_p.y));
    const double metabolic = (params.nu_tilde / params.gamma) *
                             std::pow(frobenius_of(s, params.tensor_mode), params.gamma);
    total += cd.area * (half_d2 * grad_c2 + activation + metabolic);
  }
  return total;
}

namespace {

double min_eigenvalue_diag(const fem::NodalField& c) {
  double lo = std::numeric_limits<double>::infinity();
  if (c.components == 1) {
    for (int i = 0; i < c.n; ++i) lo = std::min(lo, c.comp(0)[i]);
  } else {
    for (int i = 0; i < c.n; ++i) {
      const double c11 = c.comp(0)[i], c12 = c.comp(1)[i], c22 = c.comp(2)[i];
      lo = std::min(lo, 0.5 * (c11 + c22) - std::hypot(0.5 * (c11 - c22), c12));
    }
  }
  return lo;
}

// Reflection residual about x = 1/2 over the mirrored active pairs;
// C12 is odd under the reflection.
double symmetry_diag(const fem::FeSpace& space, const fem::NodalField& c) {
  const geom::GridTopology& t = space.topo;
  double res = 0.0;
  for (int d = 0; d < space.n_dofs; ++d) {
    const auto [i, j] = space.node_ij(d);
    const int md = space.dof_of_node[t.node_index(t.n - i, j)];
    if (md < 0) continue;
    for (int comp = 0; comp < c.components; ++comp) {
      const double parity = (c.components == 3 && comp == 1) ? -1.0 : 1.0;
      res = std::max(res, std::abs(c.comp(comp)[d] - parity * c.comp(comp)[md]));
    }
  }
  return res;
}

}  // namespace

Simulator::Simulator(SimParams params) : Simulator(params, params.level_set()) {}

Simulator::Simulator(SimParams params, const geom::LevelSet& domain)
    : params_(std::move(params)),
      space_(fem::build_space(
          geom::classify_nodes(domain, params_.n, params_.zeta, params_.alpha))),
      solver_(space_, fem::SolveOptions{params_.solver, params_.solver_tol, 0}) {
  // gamma = 2 is admitted here as the degenerate constant-weight case
  // (the configuration surface keeps the strict range).
  if (!(params_.gamma > 0.0) || !(params_.gamma <= 2.0))
    throw std::invalid_argument("SimParams: gamma must lie in (0, 2]");
  if (!(params_.epsilon > 0.0))
    throw std::invalid_argument("SimParams: epsilon must be positive");
  mass_ = fem::assemble_mass(space_, [](const fem::CellData&) { return 1.0; });
  stiffness1_ = fem::assemble_stiffness(
      space_, [](const fem::CellData&) { return quad::SymTensor{1.0, 0.0, 1.0}; });
  source_load_ = assemble_source_load(space_, params_);

  fem::NodalField c0(params_.components(), space_.n_dofs);
  for (int i = 0; i < space_.n_dofs; ++i) c0.comp(0)[i] = params_.c0;
  if (params_.tensor_mode)
    for (int i = 0; i < space_.n_dofs; ++i) c0.comp(2)[i] = params_.c0;
  state_ = make_state(0, std::move(c0), 0.0, nullptr, nullptr);
}

fem::SparseOperator Simulator::pressure_operator(const fem::NodalField& c) const {
  return assemble_pressure_operator(space_, params_, c);
}

SimState Simulator::make_state(int step, fem::NodalField c, double dc_rate,
                               const fem::NodalField* warm_p,
                               const fem::NodalField* warm_sigma) {
  SimState s;
  s.step = step;
  s.time = step * params_.dt_value();
  s.c = std::move(c);
  const fem::SparseOperator k = pressure_operator(s.c);
  // The source load is cached; assemble_load in solve_pressure would
  // recompute it, so solve directly here.
  {
    std::vector<double> b = source_load_;
    std::vector<double> x = solver_.solve_zero_mean(
        k, std::move(b), warm_p ? warm_p->comp(0) : nullptr);
    s.p = fem::NodalField(1, space_.n_dofs);
    std::copy(x.begin(), x.end(), s.p.data.begin());
  }
  s.sigma = solve_sigma(space_, params_, s.c, s.p, solver_, &k,
                        warm_sigma ? warm_sigma->comp(0) : nullptr);
  s.energy = energy(space_, params_, s.c, s.p);
  s.min_eigenvalue = min_eigenvalue_diag(s.c);
  s.dc_rate = dc_rate;
  s.symmetry_residual = symmetry_diag(space_, s.c);
  return s;
}

void Simulator::advance() {
  const double dt = params_.dt_value();
  const double exponent = params_.gamma - 2.0;
  const SimState& s = state_;

  // Metabolic weight frozen at step n.
  fem::SparseOperator weighted_mass;
  if (params_.nodal_coefficients) {
    std::vector<double> w(space_.n_dofs);
    for (int i = 0; i < space_.n_dofs; ++i) {
      const double mag = params_.tensor_mode
                             ? fem::frobenius(s.c.comp(0)[i], s.c.comp(1)[i],
                                              s.c.comp(2)[i])
                             : std::abs(s.c.comp(0)[i]);
      w[i] = std::pow(mag + params_.epsilon, exponent);
    }
    weighted_mass = fem::assemble_mass_nodal(space_, w.data());
  } else {
    weighted_mass = fem::assemble_mass(space_, [&](const fem::CellData& cd) {
      const CentroidSample smp = sample_cell(cd, s.c, nullptr, nullptr);
      return std::pow(frobenius_of(smp, params_.tensor_mode) + params_.epsilon,
                      exponent);
    });
  }

  fem::SparseOperator system = mass_;
  system.add_scaled(stiffness1_, dt * params_.d_tilde * params_.d_tilde);
  system.add_scaled(weighted_mass, dt * params_.nu_tilde);

  // Forcing loads per component, all from one pass over the cells.
  const int ncomp = params_.components();
  std::vector<std::vector<double>> rhs(ncomp,
                                       std::vector<double>(space_.n_dofs, 0.0));
  if (params_.nodal_coefficients) {
    std::vector<double> phi2_nodal(space_.n_dofs);
    for (int d = 0; d < space_.n_dofs; ++d)
      phi2_nodal[d] = params_.entropy.phi2(s.p.comp(0)[d]);
    for (const fem::CellData& cd : space_.cells) {
      const quad::BiPolynomial ph = local_interpolant(cd, s.p.comp(0));
      const quad::BiPolynomial sh = local_interpolant(cd, s.sigma.comp(0));
      const quad::BiPolynomial px = ph.derivative_x(), py = ph.derivative_y();
      const quad::BiPolynomial sx = sh.derivative_x(), sy = sh.derivative_y();
      const quad::BiPolynomial a2 = local_interpolant(cd, phi2_nodal.data());
      std::vector<quad::BiPolynomial> g;
      if (params_.tensor_mode) {
        g.push_back(a2 * (px * px) + sx * px);
        g.push_back(a2 * (px * py) + ((sx * py) + (px * sy)).scaled(0.5));
        g.push_back(a2 * (py * py) + sy * py);
      } else {
        g.push_back(a2 * ((px * px) + (py * py)) + (px * sx) + (py * sy));
      }
      const auto verts = local_vertices(cd.poly);
      for (int comp = 0; comp < ncomp; ++comp)
        for (int k = 0; k < 4; ++k)
          rhs[comp][cd.dofs[k]] += quad::integrate_polygon(
              g[comp] * quad::q1_basis_local(k, cd.poly.h),
              std::span<const geom::Point>(verts), space_.rule5);
    }
  } else {
    for (const fem::CellData& cd : space_.cells) {
      const CentroidSample smp = sample_cell(cd, s.c, &s.p, &s.sigma);
      const double a2 = params_.entropy.phi2(smp.p);
      const fem::Vec2 gp = smp.grad_p, gs = smp.grad_sigma;
      double g[3];
      if (params_.tensor_mode) {
        g[0] = a2 * gp.x * gp.x + gs.x * gp.x;
        g[1] = a2 * gp.x * gp.y + 0.5 * (gs.x * gp.y + gp.x * gs.y);
        g[2] = a2 * gp.y * gp.y + gs.y * gp.y;
      } else {
        g[0] = a2 * (gp.x * gp.x + gp.y * gp.y) + (gp.x * gs.x + gp.y * gs.y);
      }
      for (int comp = 0; comp < ncomp; ++comp)
        for (int k = 0; k < 4; ++k) rhs[comp][cd.dofs[k]] += g[comp] * cd.load[k];
    }
  }
  std::vector<const double*> warm(ncomp);
  for (int comp = 0; comp < ncomp; ++comp) {
    std::vector<double> mc(space_.n_dofs);
    mass_.matvec(s.c.comp(comp), mc.data());
    for (int i = 0; i < space_.n_dofs; ++i)
      rhs[comp][i] = mc[i] + dt * rhs[comp][i];
    warm[comp] = s.c.comp(comp);
  }

  std::vector<std::vector<double>> solutions =
      solver_.solve_spd_batch(system, rhs, warm);

  fem::NodalField c_new(ncomp, space_.n_dofs);
  double dc_inf = 0.0;
  for (int comp = 0; comp < ncomp; ++comp) {
    for (int i = 0; i < space_.n_dofs; ++i) {
      const double v = solutions[comp][i];
      if (std::isnan(v))
        throw std::runtime_error("flow: NaN in conductivity update at step " +
                                 std::to_string(s.step + 1));
      c_new.comp(comp)[i] = v;
      dc_inf = std::max(dc_inf, std::abs(v - s.c.comp(comp)[i]));
    }
  }

  state_ = make_state(s.step + 1, std::move(c_new), dc_inf / dt, &s.p, &s.sigma);
}

Simulator::RunResult Simulator::run(const std::function<void(const SimState&)>& on_state) {
  RunResult result;
  if (on_state) on_state(state_);
  const int max_steps = params_.max_steps();
  for (int step = 0; step < max_steps; ++step) {
    advance();
    ++result.steps;
    if (on_state) on_state(state_);
    if (state_.dc_rate < params_.steady_tol) {
      result.termination = Termination::SteadyState;
      return result;
    }
  }
  result.termination = Termination::TimeReached;
  return result;
}

std::vector<SimState> run_trajectory(const SimParams& params, int record_every) {
  Simulator sim(params);
  std::vector<SimState> states;
  const int cadence = std::max(1, record_every);
  sim.run([&](const SimState& s) {
    if (s.step % cadence == 0) states.push_back(s);
  });
  if (states.empty() || states.back().step != sim.state().step)
    states.push_back(sim.state());
  return states;
}

}  // namespace bionet::flow
