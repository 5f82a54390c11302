#include "retrace/forward.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "retrace/rng.hpp"

namespace retrace {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// |x - b(r)| with constant continuation of the path outside [0, T].
inline double range_at(const Trajectory& traj, const Vec3& x, double r, double T) {
  return (x - traj.position_clamped(r, T)).norm();
}

}  // namespace

RetardedTimeResult retarded_time(const Trajectory& traj, const Vec3& x, double t,
                                 const PhysicsConfig& cfg, const RetardedSolve& opts) {
  RetardedTimeResult res;
  const double T = cfg.T;
  double r = t - range_at(traj, x, t, T) / cfg.c;
  int it = 0;

  // Fixed-point sweep: contraction factor c0/c < 1.
  double prev = std::numeric_limits<double>::infinity();
  while (it < opts.max_iterations) {
    const double next = t - range_at(traj, x, r, T) / cfg.c;
    ++it;
    const double step = std::abs(next - r);
    r = next;
    if (step <= opts.tol || step >= prev) break;  // converged or stalled near roundoff
    prev = step;
  }

  // Newton polish on g(r) = r - t + |x - b(r)| / c; g' is the Doppler factor.
  for (int k = 0; k < 8 && it < opts.max_iterations; ++k, ++it) {
    const Vec3 b = traj.position_clamped(r, T);
    const Vec3 diff = x - b;
    const double d = diff.norm();
    if (d <= 0.0) break;
    const double g = r - t + d / cfg.c;
    const double gp = 1.0 - traj.velocity_clamped(r, T).dot(diff) / (cfg.c * d);
    if (gp <= 0.0) break;
    const double step = g / gp;
    r -= step;
    if (std::abs(step) <= 0.25 * opts.tol) break;
  }

  res.r = r;
  res.iterations = it;
  res.residual = std::abs(r - (t - range_at(traj, x, r, T) / cfg.c));
  res.converged = res.residual <= opts.tol;
  if (!res.converged) {
    std::ostringstream os;
    os << "retarded time did not converge at t=" << t << " (residual " << res.residual
       << " > tol " << opts.tol << " after " << it
       << " iterations); check that the source is subsonic";
    raise(errc::no_convergence, os.str());
  }
  return res;
}

double doppler_factor(const Trajectory& traj, const Vec3& x, double r, const PhysicsConfig& cfg) {
  const Vec3 diff = x - traj.position_clamped(r, cfg.T);
  const double d = diff.norm();
  if (d < 1e-12 * std::max(1.0, x.norm()))
    raise(errc::source_at_sensor, "sensor coincides with the source position at emission time");
  return 1.0 - traj.velocity_clamped(r, cfg.T).dot(diff) / (cfg.c * d);
}

double field_value(const Trajectory& traj, const Vec3& x, double t, const PhysicsConfig& cfg,
                   const RetardedSolve& opts) {
  const RetardedTimeResult rt = retarded_time(traj, x, t, cfg, opts);
  if (rt.r < 0.0) return 0.0;  // before first arrival
  const double d = range_at(traj, x, rt.r, cfg.T);
  if (d < 1e-12 * std::max(1.0, x.norm()))
    raise(errc::source_at_sensor, "sensor coincides with the source position at emission time");
  const double h = doppler_factor(traj, x, rt.r, cfg);
  return cfg.lambda / (kFourPi * d * h);
}

std::array<FieldTrace, 6> synthesize_traces(const Trajectory& traj, const SensorArray& sensors,
                                            const PhysicsConfig& cfg, const DomainSpec& dom,
                                            double dt, double noise_sigma, std::uint64_t seed,
                                            int threads) {
  if (!(dt > 0.0)) raise(errc::config_invalid, "sampling step dt must be positive");
  if (noise_sigma < 0.0) raise(errc::config_invalid, "noise_sigma must be nonnegative");
  const HorizonConstants hc = horizon_constants(dom, cfg);

  // Grid 0 = t_0 < ... < t_N = T_obs; the step is nudged so the last sample
  // lands exactly on T_obs.
  const auto n_steps = std::max<std::int64_t>(1, std::llround(hc.t_obs / dt));
  const double step = hc.t_obs / static_cast<double>(n_steps);

  RetardedSolve opts;
  opts.tol = 1e-12 * hc.t_obs;

  std::array<FieldTrace, 6> traces;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto synth_one = [&](int s) {
    try {
      FieldTrace tr;
      tr.sensor_index = s + 1;
      tr.dt = step;
      tr.noise_sigma = noise_sigma;
      tr.seed = seed;
      tr.values.resize(static_cast<std::size_t>(n_steps) + 1);
      for (std::int64_t k = 0; k <= n_steps; ++k) {
        double v = field_value(traj, sensors.points[s], step * static_cast<double>(k), cfg, opts);
        if (noise_sigma > 0.0)
          v += noise_sigma *
               rng::gaussian(seed, static_cast<std::uint64_t>(s + 1), static_cast<std::uint64_t>(k));
        tr.values[static_cast<std::size_t>(k)] = v;
      }
      traces[s] = std::move(tr);
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (threads > 1) {
    std::vector<std::thread> pool;
    for (int s = 0; s < 6; ++s) pool.emplace_back(synth_one, s);
    for (auto& th : pool) th.join();
  } else {
    for (int s = 0; s < 6; ++s) synth_one(s);
  }
  if (failure) std::rethrow_exception(failure);
  return traces;
}

}  // namespace retrace
