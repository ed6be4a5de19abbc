#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsfb/plant.hpp"
#include "tsfb/stabilizer.hpp"
#include "tsfb/timescale.hpp"

namespace tsfb::cli {

// Parameters for scales synthesized from the seed when no scale file is given.
struct ScaleGenerator {
  std::string kind = "random";  // random | deadline
  int n_points = 60;
  Seconds mu_lo = 0.08;
  Seconds mu_hi = 0.15;
};

struct RunConfig {
  std::optional<std::filesystem::path> scale_path;
  std::optional<std::filesystem::path> model_path;
  double alpha = 0.1;
  WindowSpec window{5, 0.1, 0.05, 1e9};
  std::optional<Seconds> t0;
  std::optional<Seconds> tf;
  std::vector<double> x0;  // empty means zero
  double amplitude = 2.0;
  std::optional<Seconds> mesh_h;
  double band = 0.1;
  std::optional<std::filesystem::path> output_dir;
  std::uint64_t seed = 1;
  ScaleGenerator generator;

  // sweep
  int k_lo = 2;
  int k_hi = 25;
  double alpha_lo = 0.01;
  double alpha_hi = 0.79;
  double alpha_step = 0.02;

  // verify
  std::string suite = "all";
  double exp_perturbation = 0.0;
};

// Overlays the keys of a JSON config document onto `config`. Unknown keys and
// ill-typed values raise io::ParseError.
void apply_config_json(const std::string& text, RunConfig& config);

// Scale named by the config, or the generated one.
TimeScale resolve_scale(const RunConfig& config);
ContinuousLTI resolve_model(const RunConfig& config);

std::vector<double> alpha_grid(double lo, double hi, double step);

// Runs one command line; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tsfb::cli
