// bionet command line: run the simulator and the grid / rotation studies,
// and expose the distance and order estimators on stored snapshots.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bionet/cli_io.hpp"

namespace {

using bionet::io::RunConfig;

RunConfig load_config(const std::string& path, const std::string& out_override) {
  RunConfig config = path.empty() ? RunConfig{} : bionet::io::parse_config_file(path);
  if (!out_override.empty()) config.out_dir = out_override;
  return config;
}

std::vector<int> parse_n_list(const std::string& spec, int fallback) {
  std::vector<int> out;
  if (spec.empty()) {
    out.push_back(fallback);
    return out;
  }
  size_t pos = 0;
  while (pos < spec.size()) {
    size_t comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    const std::string item = spec.substr(pos, comma - pos);
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw bionet::io::ConfigError("--n-list: not an integer: '" + item + "'");
    }
    if (out.back() < 2)
      throw bionet::io::ConfigError("--n-list: resolutions must be >= 2");
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-regulating transportation network simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, n_list_spec;
  std::string file_a, file_b;
  double theta = 0.78539816339744831;  // pi/4
  double order_p = 1.0;
  double e1 = 0.0, e2 = 0.0, rho = 2.0;

  CLI::App* run = app.add_subcommand("run", "Run one simulation");
  run->add_option("--config", config_path, "Configuration file");
  run->add_option("--out", out_dir, "Output directory (overrides out_dir)");

  CLI::App* converge = app.add_subcommand("converge", "Grid convergence study");
  converge->add_option("--config", config_path, "Configuration file");
  converge->add_option("--out", out_dir, "Output directory");
  converge->add_option("--n-list", n_list_spec, "Comma-separated resolutions")
      ->required();

  CLI::App* rotate = app.add_subcommand("rotate", "Rotated-domain agreement study");
  rotate->add_option("--config", config_path, "Configuration file");
  rotate->add_option("--out", out_dir, "Output directory");
  rotate->add_option("--n-list", n_list_spec, "Comma-separated resolutions");
  rotate->add_option("--theta", theta, "Rotation angle (radians)");

  CLI::App* distance = app.add_subcommand("distance",
                                          "Wasserstein distance between snapshots");
  distance->add_option("file_a", file_a, "First snapshot CSV")->required();
  distance->add_option("file_b", file_b, "Second snapshot CSV")->required();
  distance->add_option("--p", order_p, "Wasserstein order (default 1)");

  CLI::App* order = app.add_subcommand("order", "Richardson order estimate");
  order->add_option("e1", e1, "Coarse-grid error")->required();
  order->add_option("e2", e2, "Fine-grid error")->required();
  order->add_option("rho", rho, "Refinement ratio (default 2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto manifest = bionet::io::cmd_run(load_config(config_path, out_dir));
      std::cout << "steps = " << manifest.steps
                << "\ntermination = " << manifest.termination
                << "\nenergy_csv = " << manifest.energy_csv
                << "\nfinal_snapshot = " << manifest.final_snapshot
                << "\nmanifest = " << manifest.path << "\n";
    } else if (*converge) {
      RunConfig config = load_config(config_path, out_dir);
      const auto rows =
          bionet::io::cmd_converge(config, parse_n_list(n_list_spec, config.sim.n));
      std::printf("N,distance,order\n");
      for (const auto& row : rows) {
        if (row.has_order)
          std::printf("%d,%.6e,%.4f\n", row.n, row.distance, row.order);
        else
          std::printf("%d,%.6e,\n", row.n, row.distance);
      }
    } else if (*rotate) {
      RunConfig config = load_config(config_path, out_dir);
      const auto rows = bionet::io::cmd_rotate(
          config, theta, parse_n_list(n_list_spec, config.sim.n));
      std::printf("N,distance\n");
      for (const auto& row : rows) std::printf("%d,%.6e\n", row.n, row.distance);
    } else if (*distance) {
      std::printf("%.17g\n", bionet::io::cmd_distance(file_a, file_b, order_p));
    } else if (*order) {
      std::printf("%.17g\n", bionet::io::cmd_order(e1, e2, rho));
    }
  } catch (const bionet::io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
