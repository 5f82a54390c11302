#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "retrace/geometry.hpp"

namespace retrace {

struct RetardedTimeResult {
  double r = 0.0;        // emission time; negative means pre-arrival
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // |r - (t - |x - b(r)| / c)|
};

struct RetardedSolve {
  double tol = 1e-12;       // absolute residual tolerance, time units
  int max_iterations = 200;
};

// Unique solution of r = t - |x - b(r)| / c with the path frozen outside
// [0, T]. Fixed-point iteration (contraction factor c0/c) followed by a
// Newton polish; the residual is reported for the caller to audit.
RetardedTimeResult retarded_time(const Trajectory& traj, const Vec3& x, double t,
                                 const PhysicsConfig& cfg, const RetardedSolve& opts = {});

// h = 1 - b'(r).(x - b(r)) / (c |x - b(r)|); in [h0, 2 - h0] for subsonic
// sources. Throws SourceAtSensor when x touches the path.
double doppler_factor(const Trajectory& traj, const Vec3& x, double r, const PhysicsConfig& cfg);

// Field radiated by the moving point source: lambda / (4 pi |x - b(r)| h)
// after arrival, zero before.
double field_value(const Trajectory& traj, const Vec3& x, double t, const PhysicsConfig& cfg,
                   const RetardedSolve& opts = {});

// Uniformly sampled sensor recording on [0, T_obs].
struct FieldTrace {
  int sensor_index = 1;  // 1..6
  double dt = 0.0;
  std::vector<double> values;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return values.size(); }
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
  double t_end() const { return time(values.size() - 1); }
};

// Samples field_value for all six sensors on the uniform grid covering
// [0, T_obs] and adds i.i.d. Gaussian noise keyed by (seed, sensor, sample),
// so results are reproducible regardless of evaluation order. `threads` > 1
// distributes sensors across threads.
std::array<FieldTrace, 6> synthesize_traces(const Trajectory& traj, const SensorArray& sensors,
                                            const PhysicsConfig& cfg, const DomainSpec& dom,
                                            double dt, double noise_sigma, std::uint64_t seed,
                                            int threads = 1);

}  // namespace retrace
