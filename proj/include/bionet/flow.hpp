#pragma once

// The transportation-network model: entropy generators, the per-step
// elliptic solves for the pressure p and the auxiliary variable sigma, the
// semi-implicit update of the conductivity field C, and the rescaled energy
// functional whose constrained L2-gradient flow the update discretizes.

#include <functional>
#include <optional>
#include <string>

#include "bionet/fem.hpp"
#include "bionet/geometry.hpp"

namespace bionet::flow {

enum class Entropy { Quartic, Fisher, Mixed, Quadratic };

/// Convex entropy generator, represented by its second derivative:
///   quartic  Phi''(p) = p^2
///   fisher   Phi''(p) = (p+1)^-1
///   mixed    Phi''(p) = wq p^2 + wf (p+1)^-1
///   quadratic Phi''(p) = 1  (Phi''' = 0; a degenerate variant kept for tests)
struct EntropyGenerator {
  Entropy kind = Entropy::Quartic;
  double w_quartic = 0.5;
  double w_fisher = 0.5;

  double phi2(double p) const;
  double phi3(double p) const;
};

enum class DomainShape { Circle, Leaf, RotatedLeaf };

std::string domain_name(DomainShape d);

/// Parameters of the rescaled dynamics. Defaults are the base numerical-test
/// values (D~ = 4e-6, nu~ = 4e-2, eps = 1e-4, gamma = 0.75, r = 5e-3,
/// omega = 500, T = 400, dt = h), with a desk-scale default resolution.
struct SimParams {
  DomainShape domain = DomainShape::Circle;
  double theta = 0.0;               // rotation angle of the rotated leaf
  int n = 100;                      // cells per axis
  double d_tilde = 4e-6;            // scaled diffusion
  double nu_tilde = 4e-2;           // scaled metabolic coefficient
  double gamma = 0.75;              // metabolic exponent, in (0, 2)
  double epsilon = 1e-4;            // regularization of the metabolic weight
  double r = 5e-3;                  // isotropic background permeability
  double omega = 500.0;             // source width
  std::optional<double> source_x;   // default depends on the domain
  std::optional<double> source_y;
  double T = 400.0;                 // final (rescaled) time
  std::optional<double> dt;         // default h = 1/n
  double c0 = 1.0;                  // constant isotropic initial conductivity
  EntropyGenerator entropy{};
  bool tensor_mode = false;
  double zeta = 1.0;                // snapping threshold factor
  double alpha = 2.0;               // snapping threshold exponent
  fem::SolveOptions::Strategy solver = fem::SolveOptions::Strategy::Auto;
  double solver_tol = 1e-10;
  double steady_tol = 1e-8;         // on ||dC||_inf / dt
  bool nodal_coefficients = false;  // q5 nodal-interpolated coefficient mode
  double source_scale = 1.0;        // 0 disables the source (test harnesses)

  double dt_value() const { return dt ? *dt : 1.0 / n; }
  int max_steps() const;
  geom::Point source_center() const;
  geom::LevelSet level_set() const;
  double source(double x, double y) const;
  int components() const { return tensor_mode ? 3 : 1; }
};

/// Reduced parameters of the scaling D~ = D/c, nu~ = nu/c^2 (the solver
/// consumes only these two; the rescaled time is c^2 t).
struct ScaledParams {
  double d_tilde = 0.0;
  double nu_tilde = 0.0;
};
ScaledParams scale_parameters(double d, double c, double nu);

struct SimState {
  int step = 0;
  double time = 0.0;
  fem::NodalField c;        // 1 component (scalar) or C11, C12, C22
  fem::NodalField p;        // zero-mean pressure for this c
  fem::NodalField sigma;    // zero-mean auxiliary variable for this c
  double energy = 0.0;
  double min_eigenvalue = 0.0;   // min over nodes of the smallest eigenvalue of C
  double dc_rate = 0.0;          // ||C^n - C^(n-1)||_inf / dt (0 at step 0)
  double symmetry_residual = 0.0;  // about x = 1/2, diagnostic
};

double phi2(const EntropyGenerator& gen, double p);
double phi3(const EntropyGenerator& gen, double p);

/// Pressure solve (the mass-conservation constraint): assembles the
/// stiffness form with coefficient C^n + r I sampled per cell, the source
/// load projected onto the compatible subspace, and returns the zero-mean
/// solution.
fem::NodalField solve_pressure(const fem::FeSpace& space, const SimParams& params,
                               const fem::NodalField& c, fem::LinearSolver& solver,
                               const fem::SparseOperator* stiffness = nullptr,
                               const double* warm = nullptr);

/// Auxiliary solve: same operator as the pressure equation, right side
/// Phi'''(p) grad p . (C + rI) grad p sampled per cell and projected.
fem::NodalField solve_sigma(const fem::FeSpace& space, const SimParams& params,
                            const fem::NodalField& c, const fem::NodalField& p,
                            fem::LinearSolver& solver,
                            const fem::SparseOperator* stiffness = nullptr,
                            const double* warm = nullptr);

/// Rescaled energy of (c, p): diffusive + activation + metabolic terms,
/// integrated per polygon with centroid sampling (in both coefficient modes;
/// the energy is a diagnostic).
double energy(const fem::FeSpace& space, const SimParams& params,
              const fem::NodalField& c, const fem::NodalField& p);

class Simulator {
public:
  explicit Simulator(SimParams params);
  /// Same dynamics on an arbitrary level-set domain (the params' domain
  /// field is ignored; the source center must be set explicitly or defaults
  /// to the catalog rule).
  Simulator(SimParams params, const geom::LevelSet& domain);

  const SimParams& params() const { return params_; }
  const fem::FeSpace& space() const { return space_; }
  const SimState& state() const { return state_; }
  fem::LinearSolver& solver() { return solver_; }

  /// One semi-implicit step: p and sigma of the current state drive the
  /// forcing, the metabolic weight is frozen at step n, diffusion and decay
  /// are implicit. The new state carries fresh p, sigma and energy.
  void advance();

  enum class Termination { TimeReached, SteadyState };
  struct RunResult {
    Termination termination = Termination::TimeReached;
    int steps = 0;
  };
  /// Run until T or steady state, invoking the callback after the initial
  /// state and after every step.
  RunResult run(const std::function<void(const SimState&)>& on_state = {});

private:
  SimParams params_;
  fem::FeSpace space_;
  fem::LinearSolver solver_;
  fem::SparseOperator mass_;        // unit mass operator
  fem::SparseOperator stiffness1_;  // unit-coefficient stiffness (Neumann Laplacian)
  std::vector<double> source_load_;
  SimState state_;

  SimState make_state(int step, fem::NodalField c, double dc_rate,
                      const fem::NodalField* warm_p, const fem::NodalField* warm_sigma);
  fem::SparseOperator pressure_operator(const fem::NodalField& c) const;
};

/// Convenience: in-memory trajectory of states recorded every
/// `record_every` steps (always includes the initial and final states).
std::vector<SimState> run_trajectory(const SimParams& params, int record_every = 1);

}  // namespace bionet::flow
