#pragma once

// Run orchestration: configuration files (flat key = value text), snapshot
// and energy-series CSV persistence, run manifests, and the experiment
// commands behind the CLI subcommands.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "bionet/analysis.hpp"
#include "bionet/flow.hpp"

namespace bionet::io {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Configuration errors (bad key, bad value, missing file) exit with code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  flow::SimParams sim;
  std::string out_dir = "out";
  int snapshot_every = 0;   // 0 = only the final snapshot
  int schema_version = kSchemaVersion;
};

/// Parse a configuration file. Omitted keys keep the base-case defaults;
/// unknown keys, unreadable values and out-of-range values are ConfigErrors
/// naming the key and line.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text,
                            const std::string& origin = "<config>");

/// Canonical serialization; parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const RunConfig& config);
/// FNV-1a hash of the canonical serialization, as 16 hex digits.
std::string config_fingerprint(const RunConfig& config);

struct RunManifest {
  std::string fingerprint;
  std::string code_version = kCodeVersion;
  double wall_time_s = 0.0;
  int steps = 0;
  std::string termination;   // "time-reached" | "steady-state" | "error"
  bool partial = false;
  std::string energy_csv;
  std::string final_snapshot;
  std::vector<std::string> snapshots;
  std::string path;          // where the manifest itself was written
};

/// Execute one run: energy CSV row per state, snapshots at the configured
/// cadence plus a final snapshot, and a manifest. On failure the partial
/// outputs are flagged in the manifest and the error is rethrown.
RunManifest cmd_run(const RunConfig& config);

struct ConvergeRow {
  int n = 0;            // finer grid of the pair
  double distance = 0;  // Wasserstein distance to the previous grid
  double order = 0;     // Richardson estimate from consecutive distances
  bool has_order = false;
};
/// Grid study: run every resolution, restrict consecutive final |C| fields
/// to the common coarse lattice, report distances and observed orders.
/// Writes converge.csv under the output directory.
std::vector<ConvergeRow> cmd_converge(const RunConfig& config,
                                      const std::vector<int>& n_list);

struct RotateRow {
  int n = 0;
  double distance = 0;
};
/// Rotation study: run the leaf and the rotated leaf, map the rotated final
/// field back through the inverse rotation onto the unrotated lattice, and
/// report the Wasserstein distance per resolution. Writes rotate.csv.
std::vector<RotateRow> cmd_rotate(const RunConfig& config, double theta,
                                  const std::vector<int>& n_list);

/// Distance between the plotted magnitudes of two snapshot files.
double cmd_distance(const std::string& file_a, const std::string& file_b,
                    double p = 1.0);
double cmd_order(double e1, double e2, double rho = 2.0);

struct Snapshot {
  std::string domain;
  int n = 0;
  double h = 0.0;
  double time = 0.0;
  int components = 1;
  std::string fingerprint;
  std::vector<int> node_i, node_j;
  std::vector<std::string> node_class;
  std::vector<double> p, sigma;
  std::vector<std::array<double, 3>> c;
};

void write_snapshot(const std::string& path, const flow::Simulator& sim,
                    const flow::SimState& state, const std::string& fingerprint);
Snapshot read_snapshot(const std::string& path);
/// The plotted magnitude of a stored snapshot as a lattice field.
analysis::LatticeField snapshot_magnitude(const Snapshot& snap);

}  // namespace bionet::io
