#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "retrace/inverse.hpp"

namespace retrace {

struct InversionConfig {
  double dt = 1e-3;
  double noise_sigma = 0.0;
  std::uint64_t seed = 42;
  std::optional<double> tau_min;  // defaults to 0.05 T / 0.95 T when absent
  std::optional<double> tau_max;
  int tau_count = 200;
  ThresholdSpec thresholds;       // abs_floor <= 0 means scene default
  std::string refine = "auto";    // auto | on | off
  double mono_tol = -1.0;
};

struct StabilityConfig {
  std::vector<double> epsilons = {1e-2, 1e-3, 1e-4};
  Vec3 direction = Vec3(1.0, 0.0, 0.0);
  std::vector<double> sigmas;
  int seeds_per_sigma = 20;
  std::uint64_t seed = 1;
};

// Parsed single-document configuration. Trajectory and sensors are optional
// at parse time; commands check for what they need.
struct RunConfig {
  PhysicsConfig physics;
  DomainSpec domain;
  std::optional<Trajectory> trajectory;
  std::optional<SensorArray> sensors;
  InversionConfig inversion;
  StabilityConfig stability;
};

// Loads and validates the JSON configuration document, applying `key=value`
// overrides (dot-separated paths, values parsed as JSON when possible).
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

// Uniform tau grid derived from the inversion section.
std::vector<double> make_tau_grid(const RunConfig& config);

ReconstructOptions make_reconstruct_options(const RunConfig& config);

}  // namespace retrace
