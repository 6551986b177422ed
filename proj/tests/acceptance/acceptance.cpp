// Acceptance suite: runs the numbered criteria end to end and prints one
// PASS/FAIL line per criterion. With no argument every criterion runs;
// with an integer argument only that criterion runs. Exit code is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bionet/analysis.hpp"
#include "bionet/cli_io.hpp"
#include "bionet/flow.hpp"
#include "../support.hpp"

namespace fs = std::filesystem;
using namespace bionet;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

fs::path work_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "bionet_acceptance" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

// --- 1. quadrature exactness ------------------------------------------------

Outcome quadrature_exactness() {
  const quad::EdgeRule rule = quad::gauss_legendre_nodes(3);
  std::mt19937 rng(20240917);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto poly = testsupport::random_cut_polygon(rng);
    for (int a = 0; a <= 4; ++a) {
      for (int b = 0; a + b <= 4; ++b) {
        const double got =
            quad::integrate_polygon(quad::BiPolynomial::monomial(a, b), poly, rule);
        const double want = testsupport::integrate_polygon_oracle(
            [a, b](double x, double y) { return std::pow(x, a) * std::pow(y, b); },
            poly.vertices);
        worst = std::max(worst, std::abs(got - want) / std::abs(want));
      }
    }
  }
  return {worst <= 1e-13, fmt("max relative error %.2e over 100 polygons", worst)};
}

// --- 2. elliptic convergence ------------------------------------------------

Outcome elliptic_convergence() {
  const geom::LevelSet ls = geom::LevelSet::circle({0.5, 0.5}, 0.45);
  auto exact = [](double x, double y) { return std::cos(kPi * x) * std::cos(kPi * y); };
  auto grad = [](double x, double y) {
    return fem::Vec2{-kPi * std::sin(kPi * x) * std::cos(kPi * y),
                     -kPi * std::cos(kPi * x) * std::sin(kPi * y)};
  };

  std::vector<double> hs, errors;
  for (int n : {16, 32, 64, 128}) {
    const fem::FeSpace space = fem::build_space(geom::classify_nodes(ls, n));
    const auto k = fem::assemble_stiffness(
        space, [](const fem::CellData&) { return quad::SymTensor{1, 0, 1}; });
    auto b = fem::assemble_load(space, [&](const fem::CellData& cd) {
      return 2.0 * kPi * kPi * exact(cd.centroid.x, cd.centroid.y);
    });
    const auto flux = fem::assemble_boundary_flux_load(
        space, [&](geom::Point p, fem::Vec2 nrm) {
          const fem::Vec2 g = grad(p.x, p.y);
          return g.x * nrm.x + g.y * nrm.y;
        });
    for (int d = 0; d < space.n_dofs; ++d) b[d] += flux[d];
    const fem::NodalField u = fem::solve_neumann_zero_mean(k, b, space);

    // Compare against the exact solution shifted to the same (zero) mean.
    double int_exact = 0.0;
    for (const fem::CellData& cd : space.cells)
      int_exact += testsupport::integrate_polygon_oracle(
          [&](double x, double y) { return exact(x, y); }, cd.poly.vertices);
    const double mean = int_exact / space.domain_area;
    double l2 = 0.0;
    for (const fem::CellData& cd : space.cells)
      l2 += testsupport::integrate_polygon_oracle(
          [&](double x, double y) {
            const double diff =
                fem::cell_value_at(cd, u.comp(0), {x, y}) - (exact(x, y) - mean);
            return diff * diff;
          },
          cd.poly.vertices);
    hs.push_back(space.topo.h);
    errors.push_back(std::sqrt(l2));
  }

  // Least-squares slope of log(error) against log(h).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int m = static_cast<int>(errors.size());
  for (int i = 0; i < m; ++i) {
    const double x = std::log(hs[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  std::ostringstream detail;
  detail << "L2 errors";
  for (double e : errors) detail << " " << fmt("%.3e", e);
  detail << ", observed order " << fmt("%.3f", slope);
  return {slope >= 1.8, detail.str()};
}

// --- 3. mass consistency -----------------------------------------------------

Outcome mass_consistency() {
  const double exact_area = kPi * 0.45 * 0.45;
  double worst_gap = 0.0, worst_area = 0.0, worst_ratio = 0.0;
  for (int n : {20, 40, 80}) {
    const fem::FeSpace space = fem::build_space(
        geom::classify_nodes(geom::LevelSet::circle({0.5, 0.5}, 0.45), n));
    const auto mass =
        fem::assemble_mass(space, [](const fem::CellData&) { return 1.0; });
    double sum = 0.0;
    for (double v : mass.values()) sum += v;
    worst_gap = std::max(worst_gap, std::abs(sum - space.domain_area));
    const double hh = space.topo.h * space.topo.h;
    worst_area = std::max(worst_area, std::abs(space.domain_area - exact_area));
    worst_ratio =
        std::max(worst_ratio, std::abs(space.domain_area - exact_area) / (2.0 * hh));
  }
  const bool pass = worst_gap <= 1e-12 && worst_ratio <= 1.0;
  return {pass, fmt("mass-area gap %.2e, area error %.2e (<= 2h^2: ratio %.2f)",
                    worst_gap, worst_area, worst_ratio)};
}

// --- 4. closed-form step ------------------------------------------------------

Outcome closed_form_step() {
  flow::SimParams p;
  p.n = 24;
  p.source_scale = 0.0;  // F = 0
  p.d_tilde = 0.0;
  p.nu_tilde = 4e-2;
  p.gamma = 0.75;
  p.epsilon = 1e-4;
  p.T = 100.0 / 24.0;  // 100 steps of dt = h
  // An uncut lattice isolates the update formula from cut-cell conditioning.
  flow::Simulator sim(p, geom::LevelSet::circle({0.5, 0.5}, 10.0));
  const double dt = p.dt_value();
  double worst = 0.0;
  for (int step = 0; step < 100; ++step) {
    const double before = sim.state().c.comp(0)[0];
    sim.advance();
    const double expected =
        before / (1.0 + dt * p.nu_tilde * std::pow(before + p.epsilon, -1.25));
    for (int d = 0; d < sim.space().n_dofs; ++d)
      worst = std::max(worst,
                       std::abs(sim.state().c.comp(0)[d] - expected) / expected);
  }
  return {worst <= 1e-13, fmt("max per-step relative gap %.2e over 100 steps", worst)};
}

// --- 5. energy decay -----------------------------------------------------------

Outcome energy_decay() {
  const fs::path out = work_dir("energy_decay");
  io::RunConfig cfg;
  cfg.sim.domain = flow::DomainShape::Leaf;
  cfg.sim.n = 100;
  cfg.sim.T = 10.0;
  cfg.out_dir = out.string();
  const auto manifest = io::cmd_run(cfg);
  if (!fs::exists(manifest.energy_csv)) return {false, "energy CSV missing"};

  std::ifstream in(manifest.energy_csv);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> energies;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    energies.push_back(std::atof(cell.c_str()));
  }
  if (energies.size() < 100)
    return {false, fmt("expected a long energy series, got %.0f rows",
                       double(energies.size()))};
  double worst = -1e300;
  for (size_t k = 2; k < energies.size(); ++k)
    worst = std::max(worst, energies[k] - energies[k - 1] -
                                1e-10 * std::abs(energies[k - 1]));
  return {worst <= 0.0,
          fmt("%.0f steps, worst post-step-1 energy increase margin %.2e",
              double(energies.size() - 1), worst)};
}

// --- 6. symmetry preservation/loss ---------------------------------------------

double final_symmetry_residual(double nu, double eps) {
  flow::SimParams p;
  p.domain = flow::DomainShape::Circle;
  p.n = 100;
  p.nu_tilde = nu;
  p.epsilon = eps;
  p.gamma = 0.75;
  p.T = 5.0;
  flow::Simulator sim(p);
  sim.run();
  const auto field = analysis::magnitude_field(sim.space(), sim.state().c);
  return analysis::symmetry_residual(field, analysis::Axis::VerticalMid);
}

Outcome symmetry_preservation() {
  const double frozen = final_symmetry_residual(0.0, 1e-4);
  const double regularized = final_symmetry_residual(0.1, 1e-1);
  const double sharp = final_symmetry_residual(0.1, 1e-4);
  const bool pass = frozen < 1e-8 && regularized <= sharp;
  return {pass,
          fmt("nu=0 residual %.2e (< 1e-8); eps=1e-1 %.2e <= eps=1e-4 %.2e",
              frozen, regularized, sharp)};
}

// --- 7. rotation agreement ------------------------------------------------------

Outcome rotation_agreement() {
  const fs::path out = work_dir("rotation");
  io::RunConfig cfg;
  cfg.sim.domain = flow::DomainShape::Leaf;
  cfg.sim.T = 10.0;
  cfg.sim.entropy.kind = flow::Entropy::Quartic;
  cfg.out_dir = out.string();
  const auto rows = io::cmd_rotate(cfg, kPi / 4.0, {100, 200});
  if (rows.size() != 2) return {false, "expected two resolutions"};
  return {rows[1].distance < rows[0].distance,
          fmt("W(N=100) = %.4e, W(N=200) = %.4e", rows[0].distance,
              rows[1].distance)};
}

// --- 8. Wasserstein metric suite -------------------------------------------------

Outcome wasserstein_metric() {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(15), b(15), c(15);
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    for (double& v : c) v = u(rng);
    const double ab = analysis::wasserstein_distance(a, b);
    const double ba = analysis::wasserstein_distance(b, a);
    const double aa = analysis::wasserstein_distance(a, a);
    const double ac = analysis::wasserstein_distance(a, c);
    const double cb = analysis::wasserstein_distance(c, b);
    worst = std::max(worst, std::abs(ab - ba));
    worst = std::max(worst, aa);
    worst = std::max(worst, ab - (ac + cb));

    std::vector<double> shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    worst = std::max(worst, analysis::wasserstein_distance(a, shuffled));

    const double shift = u(rng);
    std::vector<double> a2 = a, b2 = b;
    for (double& v : a2) v += shift;
    for (double& v : b2) v += shift;
    worst = std::max(worst, std::abs(analysis::wasserstein_distance(a2, b2) - ab));
  }
  return {worst <= 1e-12, fmt("worst axiom violation %.2e over 200 triples", worst)};
}

// --- 9. determinism ---------------------------------------------------------------

Outcome determinism() {
  const fs::path dir = work_dir("determinism");
  const fs::path cfg_path = dir / "run.cfg";
  std::ofstream(cfg_path) << "domain = leaf\nN = 40\nT = 0.5\nsnapshot_every = 10\n";
  const std::string cli = BIONET_CLI_PATH;
  for (const char* tag : {"a", "b"}) {
    const std::string cmd = cli + " run --config " + cfg_path.string() + " --out " +
                            (dir / tag).string() + " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed"};
  }
  std::vector<std::string> files{"energy.csv", "snapshot_final.csv"};
  for (const auto& entry : fs::directory_iterator(dir / "a"))
    if (entry.path().filename().string().rfind("snapshot_0", 0) == 0)
      files.push_back(entry.path().filename().string());
  int compared = 0;
  for (const auto& f : files) {
    if (slurp(dir / "a" / f) != slurp(dir / "b" / f))
      return {false, "file differs between executions: " + f};
    ++compared;
  }
  return {compared >= 3,
          fmt("%.0f files byte-identical across two executions", double(compared))};
}

// --- 10. branch diagnostics ---------------------------------------------------------

int component_count_for_r(double r) {
  flow::SimParams p;
  p.domain = flow::DomainShape::Leaf;
  p.n = 200;
  p.T = 10.0;
  p.r = r;
  flow::Simulator sim(p);
  sim.run();
  const auto field = analysis::magnitude_field(sim.space(), sim.state().c);
  return analysis::connected_components_above(field, r);
}

Outcome branch_diagnostics() {
  const int fine = component_count_for_r(1e-3);
  const int coarse = component_count_for_r(5e-3);
  return {fine >= coarse,
          fmt("components above r: %.0f (r=1e-3) vs %.0f (r=5e-3)", double(fine),
              double(coarse))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "quadrature exactness", 5.0, quadrature_exactness},
      {2, "elliptic convergence", 120.0, elliptic_convergence},
      {3, "mass consistency", 60.0, mass_consistency},
      {4, "closed-form step", 60.0, closed_form_step},
      {5, "energy decay", 600.0, energy_decay},
      {6, "symmetry preservation/loss", 900.0, symmetry_preservation},
      {7, "rotation agreement", 1800.0, rotation_agreement},
      {8, "wasserstein metric suite", 60.0, wasserstein_metric},
      {9, "determinism", 120.0, determinism},
      {10, "branch diagnostics", 1200.0, branch_diagnostics},
  };

  int selected = 0;
  if (argc > 1) selected = std::atoi(argv[1]);

  int failures = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (selected != 0 && c.id != selected) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = seconds <= c.budget_seconds;
    const bool pass = outcome.pass && in_budget;
    std::printf("%s %2d %-28s %s [%.1f s%s]\n", pass ? "PASS" : "FAIL", c.id,
                c.name, outcome.detail.c_str(), seconds,
                in_budget ? "" : ", over budget");
    std::fflush(stdout);
    failures += pass ? 0 : 1;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion id\n");
    return 64;
  }
  return failures;
}
