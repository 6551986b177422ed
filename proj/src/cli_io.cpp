#include "bionet/cli_io.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace bionet::io {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_config(const std::string& origin, int line,
                             const std::string& what) {
  std::ostringstream msg;
  msg << origin;
  if (line > 0) msg << ":" << line;
  msg << ": " << what;
  throw ConfigError(msg.str());
}

double parse_double(const std::string& origin, int line, const std::string& key,
                    const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0' || !std::isfinite(v))
    bad_config(origin, line, "key '" + key + "': not a number: '" + value + "'");
  return v;
}

int parse_int(const std::string& origin, int line, const std::string& key,
              const std::string& value) {
  char* end = nullptr;
  const long v = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    bad_config(origin, line, "key '" + key + "': not an integer: '" + value + "'");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& origin, int line, const std::string& key,
                const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_config(origin, line, "key '" + key + "': not a boolean: '" + value + "'");
}

void check(bool ok, const std::string& origin, int line, const std::string& what) {
  if (!ok) bad_config(origin, line, what);
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  std::vector<std::string> seen;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      bad_config(origin, line, "expected 'key = value', got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      bad_config(origin, line, "duplicate key '" + key + "'");
    seen.push_back(key);

    flow::SimParams& p = cfg.sim;
    if (key == "domain") {
      if (value == "circle")
        p.domain = flow::DomainShape::Circle;
      else if (value == "leaf")
        p.domain = flow::DomainShape::Leaf;
      else if (value == "rotated_leaf")
        p.domain = flow::DomainShape::RotatedLeaf;
      else
        bad_config(origin, line, "key 'domain': unknown domain '" + value + "'");
    } else if (key == "N") {
      p.n = parse_int(origin, line, key, value);
      check(p.n >= 2, origin, line, "key 'N': need N >= 2");
    } else if (key == "D_tilde") {
      p.d_tilde = parse_double(origin, line, key, value);
      check(p.d_tilde >= 0.0, origin, line, "key 'D_tilde': must be >= 0");
    } else if (key == "nu_tilde") {
      p.nu_tilde = parse_double(origin, line, key, value);
      check(p.nu_tilde >= 0.0, origin, line, "key 'nu_tilde': must be >= 0");
    } else if (key == "gamma") {
      p.gamma = parse_double(origin, line, key, value);
      check(p.gamma > 0.0 && p.gamma < 2.0, origin, line,
            "key 'gamma': must lie in (0, 2)");
    } else if (key == "epsilon") {
      p.epsilon = parse_double(origin, line, key, value);
      check(p.epsilon > 0.0, origin, line, "key 'epsilon': must be > 0");
    } else if (key == "r") {
      p.r = parse_double(origin, line, key, value);
      check(p.r > 0.0, origin, line, "key 'r': must be > 0");
    } else if (key == "omega") {
      p.omega = parse_double(origin, line, key, value);
      check(p.omega > 0.0, origin, line, "key 'omega': must be > 0");
    } else if (key == "source_x") {
      p.source_x = parse_double(origin, line, key, value);
      check(*p.source_x >= 0.0 && *p.source_x <= 1.0, origin, line,
            "key 'source_x': must lie in [0, 1]");
    } else if (key == "source_y") {
      p.source_y = parse_double(origin, line, key, value);
      check(*p.source_y >= 0.0 && *p.source_y <= 1.0, origin, line,
            "key 'source_y': must lie in [0, 1]");
    } else if (key == "T") {
      p.T = parse_double(origin, line, key, value);
      check(p.T >= 0.0, origin, line, "key 'T': must be >= 0");
    } else if (key == "dt") {
      p.dt = parse_double(origin, line, key, value);
      check(*p.dt > 0.0, origin, line, "key 'dt': must be > 0");
    } else if (key == "C0") {
      p.c0 = parse_double(origin, line, key, value);
      check(p.c0 > 0.0, origin, line, "key 'C0': must be > 0");
    } else if (key == "entropy") {
      if (value == "quartic")
        p.entropy.kind = flow::Entropy::Quartic;
      else if (value == "fisher")
        p.entropy.kind = flow::Entropy::Fisher;
      else if (value == "mixed")
        p.entropy.kind = flow::Entropy::Mixed;
      else if (value == "quadratic")
        p.entropy.kind = flow::Entropy::Quadratic;
      else
        bad_config(origin, line, "key 'entropy': unknown generator '" + value + "'");
    } else if (key == "tensor_mode") {
      p.tensor_mode = parse_bool(origin, line, key, value);
    } else if (key == "theta") {
      p.theta = parse_double(origin, line, key, value);
    } else if (key == "zeta") {
      p.zeta = parse_double(origin, line, key, value);
      check(p.zeta > 0.0, origin, line, "key 'zeta': must be > 0");
    } else if (key == "alpha") {
      p.alpha = parse_double(origin, line, key, value);
      check(p.alpha > 0.0, origin, line, "key 'alpha': must be > 0");
    } else if (key == "snapshot_every") {
      cfg.snapshot_every = parse_int(origin, line, key, value);
      check(cfg.snapshot_every >= 0, origin, line,
            "key 'snapshot_every': must be >= 0");
    } else if (key == "out_dir") {
      cfg.out_dir = value;
      check(!cfg.out_dir.empty(), origin, line, "key 'out_dir': must be nonempty");
    } else if (key == "coeff_sampling") {
      if (value == "centroid")
        p.nodal_coefficients = false;
      else if (value == "nodal-q5")
        p.nodal_coefficients = true;
      else
        bad_config(origin, line,
                   "key 'coeff_sampling': expected 'centroid' or 'nodal-q5'");
    } else if (key == "solver_tol") {
      p.solver_tol = parse_double(origin, line, key, value);
      check(p.solver_tol > 0.0 && p.solver_tol < 1.0, origin, line,
            "key 'solver_tol': must lie in (0, 1)");
    } else if (key == "schema_version") {
      cfg.schema_version = parse_int(origin, line, key, value);
      check(cfg.schema_version == kSchemaVersion, origin, line,
            "key 'schema_version': unsupported version");
    } else {
      bad_config(origin, line, "unknown key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
  const flow::SimParams& p = cfg.sim;
  std::ostringstream out;
  out << "schema_version = " << cfg.schema_version << "\n";
  out << "domain = " << flow::domain_name(p.domain) << "\n";
  out << "N = " << p.n << "\n";
  out << "D_tilde = " << fmt(p.d_tilde) << "\n";
  out << "nu_tilde = " << fmt(p.nu_tilde) << "\n";
  out << "gamma = " << fmt(p.gamma) << "\n";
  out << "epsilon = " << fmt(p.epsilon) << "\n";
  out << "r = " << fmt(p.r) << "\n";
  out << "omega = " << fmt(p.omega) << "\n";
  if (p.source_x) out << "source_x = " << fmt(*p.source_x) << "\n";
  if (p.source_y) out << "source_y = " << fmt(*p.source_y) << "\n";
  out << "T = " << fmt(p.T) << "\n";
  if (p.dt) out << "dt = " << fmt(*p.dt) << "\n";
  out << "C0 = " << fmt(p.c0) << "\n";
  switch (p.entropy.kind) {
    case flow::Entropy::Quartic: out << "entropy = quartic\n"; break;
    case flow::Entropy::Fisher: out << "entropy = fisher\n"; break;
    case flow::Entropy::Mixed: out << "entropy = mixed\n"; break;
    case flow::Entropy::Quadratic: out << "entropy = quadratic\n"; break;
  }
  out << "tensor_mode = " << (p.tensor_mode ? "true" : "false") << "\n";
  out << "theta = " << fmt(p.theta) << "\n";
  out << "zeta = " << fmt(p.zeta) << "\n";
  out << "alpha = " << fmt(p.alpha) << "\n";
  out << "snapshot_every = " << cfg.snapshot_every << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  out << "coeff_sampling = " << (p.nodal_coefficients ? "nodal-q5" : "centroid")
      << "\n";
  out << "solver_tol = " << fmt(p.solver_tol) << "\n";
  return out.str();
}

std::string config_fingerprint(const RunConfig& cfg) {
  // The output location is not part of the run identity: the same physics
  // written elsewhere must fingerprint identically.
  RunConfig canonical = cfg;
  canonical.out_dir = "out";
  const std::string s = serialize_config(canonical);
  uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : s) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
  return buf;
}

namespace {

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  fs::rename(tmp, path);
}

std::string node_class_name(geom::NodeClass c) {
  return c == geom::NodeClass::Internal ? "internal" : "ghost";
}

}  // namespace

void write_snapshot(const std::string& path, const flow::Simulator& sim,
                    const flow::SimState& state, const std::string& fingerprint) {
  const fem::FeSpace& space = sim.space();
  const int ncomp = state.c.components;
  std::ostringstream out;
  out << "# bionet snapshot\n";
  out << "# schema = " << kSchemaVersion << "\n";
  out << "# domain = " << flow::domain_name(sim.params().domain) << "\n";
  out << "# n = " << space.topo.n << "\n";
  out << "# h = " << fmt(space.topo.h) << "\n";
  out << "# time = " << fmt(state.time) << "\n";
  out << "# components = " << ncomp << "\n";
  out << "# fingerprint = " << fingerprint << "\n";
  out << (ncomp == 1 ? "x,y,class,p,sigma,C" : "x,y,class,p,sigma,C11,C12,C22")
      << "\n";
  for (int d = 0; d < space.n_dofs; ++d) {
    const auto [i, j] = space.node_ij(d);
    const geom::Point xy = space.topo.node_xy(i, j);
    out << fmt(xy.x) << ',' << fmt(xy.y) << ','
        << node_class_name(space.topo.cls(i, j)) << ',' << fmt(state.p.comp(0)[d])
        << ',' << fmt(state.sigma.comp(0)[d]);
    for (int c = 0; c < ncomp; ++c) out << ',' << fmt(state.c.comp(c)[d]);
    out << "\n";
  }
  atomic_write(path, out.str());
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open snapshot");
  Snapshot snap;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const size_t eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(line.substr(1, eq - 1));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "domain") snap.domain = value;
      else if (key == "n") snap.n = std::atoi(value.c_str());
      else if (key == "h") snap.h = std::atof(value.c_str());
      else if (key == "time") snap.time = std::atof(value.c_str());
      else if (key == "components") snap.components = std::atoi(value.c_str());
      else if (key == "fingerprint") snap.fingerprint = value;
      continue;
    }
    if (!header_seen) {
      const std::string expect =
          snap.components == 1 ? "x,y,class,p,sigma,C" : "x,y,class,p,sigma,C11,C12,C22";
      if (trim(line) != expect)
        throw std::runtime_error(path + ": unexpected snapshot header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> parts;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) parts.push_back(cell);
    const size_t expected = 5 + snap.components;
    if (parts.size() != expected)
      throw std::runtime_error(path + ": malformed snapshot row '" + line + "'");
    const double x = std::atof(parts[0].c_str());
    const double y = std::atof(parts[1].c_str());
    snap.node_i.push_back(static_cast<int>(std::lround(x / snap.h)));
    snap.node_j.push_back(static_cast<int>(std::lround(y / snap.h)));
    snap.node_class.push_back(parts[2]);
    snap.p.push_back(std::atof(parts[3].c_str()));
    snap.sigma.push_back(std::atof(parts[4].c_str()));
    std::array<double, 3> c{0.0, 0.0, 0.0};
    for (int k = 0; k < snap.components; ++k)
      c[k] = std::atof(parts[5 + k].c_str());
    snap.c.push_back(c);
  }
  if (!header_seen || snap.n <= 0 || snap.h <= 0.0)
    throw std::runtime_error(path + ": incomplete snapshot file");
  return snap;
}

analysis::LatticeField snapshot_magnitude(const Snapshot& snap) {
  analysis::LatticeField f;
  f.n = snap.n;
  f.h = snap.h;
  f.sample_at.assign((snap.n + 1) * (snap.n + 1), -1);
  for (size_t k = 0; k < snap.c.size(); ++k) {
    f.sample_at[snap.node_j[k] * (snap.n + 1) + snap.node_i[k]] =
        static_cast<int>(k);
    f.value.push_back(snap.components == 1
                          ? snap.c[k][0]
                          : fem::frobenius(snap.c[k][0], snap.c[k][1], snap.c[k][2]));
  }
  return f;
}

namespace {

std::string snapshot_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%06d.csv", step);
  return buf;
}

std::string termination_name(flow::Simulator::Termination t) {
  return t == flow::Simulator::Termination::SteadyState ? "steady-state"
                                                        : "time-reached";
}

void write_manifest(const RunManifest& m) {
  std::ostringstream out;
  out << "schema_version = " << kSchemaVersion << "\n";
  out << "config_fingerprint = " << m.fingerprint << "\n";
  out << "code_version = " << m.code_version << "\n";
  out << "deterministic = 1\n";
  out << "time_units = rescaled (t = c^2 * physical time)\n";
  out << "wall_time_s = " << fmt(m.wall_time_s) << "\n";
  out << "steps = " << m.steps << "\n";
  out << "termination = " << m.termination << "\n";
  out << "partial = " << (m.partial ? 1 : 0) << "\n";
  out << "energy_csv = " << m.energy_csv << "\n";
  out << "final_snapshot = " << m.final_snapshot << "\n";
  out << "snapshot_count = " << m.snapshots.size() << "\n";
  for (size_t k = 0; k < m.snapshots.size(); ++k)
    out << "snapshot_" << k << " = " << m.snapshots[k] << "\n";
  atomic_write(m.path, out.str());
}

}  // namespace

RunManifest cmd_run(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(config.out_dir);
  RunManifest manifest;
  manifest.fingerprint = config_fingerprint(config);
  manifest.path = config.out_dir + "/manifest.txt";
  manifest.energy_csv = config.out_dir + "/energy.csv";
  manifest.final_snapshot = config.out_dir + "/snapshot_final.csv";
  manifest.partial = true;
  manifest.termination = "error";

  const std::string energy_tmp = manifest.energy_csv + ".tmp";
  std::ofstream energy(energy_tmp, std::ios::binary);
  if (!energy) throw std::runtime_error("cannot write " + energy_tmp);
  energy << "step,t,E,dC_dt_inf,min_eig\n";

  auto finish_energy = [&]() {
    energy.close();
    fs::rename(energy_tmp, manifest.energy_csv);
  };

  try {
    flow::Simulator sim(config.sim);
    const auto result = sim.run([&](const flow::SimState& s) {
      energy << s.step << ',' << fmt(s.time) << ',' << fmt(s.energy) << ','
             << fmt(s.dc_rate) << ',' << fmt(s.min_eigenvalue) << "\n";
      if (config.snapshot_every > 0 && s.step % config.snapshot_every == 0) {
        const std::string file = config.out_dir + "/" + snapshot_name(s.step);
        write_snapshot(file, sim, s, manifest.fingerprint);
        manifest.snapshots.push_back(file);
      }
    });
    finish_energy();
    write_snapshot(manifest.final_snapshot, sim, sim.state(), manifest.fingerprint);
    manifest.steps = result.steps;
    manifest.termination = termination_name(result.termination);
    manifest.partial = false;
  } catch (...) {
    // Keep whatever was produced, flag the manifest, and propagate.
    finish_energy();
    manifest.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(manifest);
    throw;
  }
  manifest.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(manifest);
  return manifest;
}

namespace {

// Magnitude of the conductivity at an arbitrary point, through the Q1
// interpolant on the containing cell; empty when the point falls outside
// the contributing cells.
std::optional<double> magnitude_at(const fem::FeSpace& space,
                                   const fem::NodalField& c, geom::Point pt) {
  const geom::GridTopology& t = space.topo;
  if (pt.x < 0.0 || pt.x > 1.0 || pt.y < 0.0 || pt.y > 1.0) return std::nullopt;
  const int ci = std::min(static_cast<int>(pt.x / t.h), t.n - 1);
  const int cj = std::min(static_cast<int>(pt.y / t.h), t.n - 1);
  const int slot = space.cell_slot[t.cell_index(ci, cj)];
  if (slot < 0) return std::nullopt;
  const fem::CellData& cd = space.cells[slot];
  if (c.components == 1) return fem::cell_value_at(cd, c.comp(0), pt);
  const double c11 = fem::cell_value_at(cd, c.comp(0), pt);
  const double c12 = fem::cell_value_at(cd, c.comp(1), pt);
  const double c22 = fem::cell_value_at(cd, c.comp(2), pt);
  return fem::frobenius(c11, c12, c22);
}

struct FinalField {
  flow::SimParams params;
  analysis::LatticeField magnitude;
};

FinalField run_final_magnitude(flow::SimParams params) {
  flow::Simulator sim(std::move(params));
  sim.run();
  return {sim.params(), analysis::magnitude_field(sim.space(), sim.state().c)};
}

}  // namespace

std::vector<ConvergeRow> cmd_converge(const RunConfig& config,
                                      const std::vector<int>& n_list) {
  if (n_list.size() < 2)
    throw ConfigError("converge: need at least two grid resolutions");
  for (size_t k = 1; k < n_list.size(); ++k) {
    if (n_list[k] <= n_list[k - 1] || n_list[k] % n_list[k - 1] != 0)
      throw ConfigError(
          "converge: resolutions must be increasing integer multiples");
  }

  std::vector<analysis::LatticeField> fields;
  for (int n : n_list) {
    flow::SimParams p = config.sim;
    p.n = n;
    fields.push_back(run_final_magnitude(std::move(p)).magnitude);
  }

  std::vector<ConvergeRow> rows;
  for (size_t k = 1; k < fields.size(); ++k) {
    const analysis::LatticeField& coarse = fields[k - 1];
    const analysis::LatticeField& fine = fields[k];
    const int ratio = n_list[k] / n_list[k - 1];
    std::vector<double> u, v;
    for (int j = 0; j <= coarse.n; ++j) {
      for (int i = 0; i <= coarse.n; ++i) {
        if (!coarse.has(i, j) || !fine.has(i * ratio, j * ratio)) continue;
        u.push_back(coarse.at(i, j));
        v.push_back(fine.at(i * ratio, j * ratio));
      }
    }
    ConvergeRow row;
    row.n = n_list[k];
    row.distance = analysis::wasserstein_distance(std::move(u), std::move(v));
    if (rows.size() >= 1 && rows.back().distance > 0.0 && row.distance > 0.0) {
      const double rho = static_cast<double>(n_list[k]) / n_list[k - 1];
      row.order = analysis::richardson_order(rows.back().distance, row.distance, rho);
      row.has_order = true;
    }
    rows.push_back(row);
  }

  fs::create_directories(config.out_dir);
  std::ostringstream out;
  out << "N,distance,order\n";
  for (const ConvergeRow& row : rows) {
    out << row.n << ',' << fmt(row.distance) << ',';
    if (row.has_order) out << fmt(row.order);
    out << "\n";
  }
  atomic_write(config.out_dir + "/converge.csv", out.str());
  return rows;
}

std::vector<RotateRow> cmd_rotate(const RunConfig& config, double theta,
                                  const std::vector<int>& n_list) {
  if (n_list.empty()) throw ConfigError("rotate: need at least one resolution");
  std::vector<RotateRow> rows;
  const geom::Point pivot{0.5, 0.5};
  for (int n : n_list) {
    flow::SimParams base = config.sim;
    base.n = n;
    base.domain = flow::DomainShape::Leaf;
    base.theta = 0.0;

    flow::SimParams rotated = base;
    rotated.domain = flow::DomainShape::RotatedLeaf;
    rotated.theta = theta;

    flow::Simulator plain(base);
    plain.run();
    flow::Simulator turned(rotated);
    turned.run();

    // Pull the rotated solution back onto the unrotated lattice.
    const fem::FeSpace& space = plain.space();
    std::vector<double> u, v;
    for (int d = 0; d < space.n_dofs; ++d) {
      const auto [i, j] = space.node_ij(d);
      const geom::Point forward =
          geom::rotate_about(space.topo.node_xy(i, j), pivot, theta);
      const auto mapped = magnitude_at(turned.space(), turned.state().c, forward);
      if (!mapped) continue;
      const fem::NodalField& c = plain.state().c;
      u.push_back(c.components == 1
                      ? c.comp(0)[d]
                      : fem::frobenius(c.comp(0)[d], c.comp(1)[d], c.comp(2)[d]));
      v.push_back(*mapped);
    }
    rows.push_back({n, analysis::wasserstein_distance(std::move(u), std::move(v))});
  }

  fs::create_directories(config.out_dir);
  std::ostringstream out;
  out << "N,distance\n";
  for (const RotateRow& row : rows)
    out << row.n << ',' << fmt(row.distance) << "\n";
  atomic_write(config.out_dir + "/rotate.csv", out.str());
  return rows;
}

double cmd_distance(const std::string& file_a, const std::string& file_b, double p) {
  const Snapshot a = read_snapshot(file_a);
  const Snapshot b = read_snapshot(file_b);
  return analysis::wasserstein_distance(snapshot_magnitude(a).value,
                                        snapshot_magnitude(b).value, p);
}

double cmd_order(double e1, double e2, double rho) {
  return analysis::richardson_order(e1, e2, rho);
}

}  // namespace bionet::io
