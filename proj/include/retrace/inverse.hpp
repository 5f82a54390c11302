#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "retrace/forward.hpp"
#include "retrace/geometry.hpp"

namespace retrace {

struct ArrivalTime {
  double t_x = 0.0;
  double detection_margin = 0.0;  // half-width of the grid/noise uncertainty
};

struct ThresholdSpec {
  double abs_floor = 0.0;  // absolute field threshold
  double k_sigma = 5.0;    // multiples of the trace noise level
  int hold = 5;            // consecutive samples required above threshold
};

// Default absolute floor for a scene: a tiny fraction of the weakest
// possible post-arrival amplitude lambda / (4 pi dist(Gamma, D)).
double default_abs_floor(const PhysicsConfig& cfg, const DomainSpec& dom);

// First time the trace rises above max(abs_floor, k_sigma * noise_sigma) and
// stays there for `hold` samples; reported as the midpoint between the last
// quiet sample and the first of the run.
ArrivalTime detect_arrival(const FieldTrace& trace, const ThresholdSpec& spec);

// Trilateration of the source position at time zero from the six arrival
// times: ranges d_i = c * t_i feed the paired difference system.
Vec3 estimate_initial_position(const SensorArray& sensors,
                               const std::array<ArrivalTime, 6>& arrivals, double c);

// Emission-time curve r(x_i, t) on [t_x, T_obs], strictly increasing.
struct RetardedTimeCurve {
  int sensor_index = 1;
  std::vector<double> t_grid;
  std::vector<double> r_values;
};

// Integrates dr/dt = (4 pi c phi(t) / lambda) (t - r), r(t_x) = 0, with RK4
// on the trace grid. Between samples phi is interpolated by a
// monotonicity-preserving cubic; in the sliver between t_x and the first
// post-arrival sample the smooth branch is extrapolated backward so the jump
// does not pollute the first step. mono_tol < 0 picks a noise-aware default.
RetardedTimeCurve integrate_retarded_curve(const FieldTrace& trace, const ArrivalTime& arrival,
                                           const PhysicsConfig& cfg, double mono_tol = -1.0);

// Unique t with r(x_i, t) = tau (smallest such t when the curve is locally
// flat), by bisection on the monotone cubic interpolant of the curve.
double invert_curve(const RetardedTimeCurve& curve, double tau);

// Right-hand side (A_12, A_34, A_56) of the paired difference system at tau.
Vec3 assemble_rhs(const SensorArray& sensors, const std::array<double, 6>& t_taus, double tau,
                  double c);

struct PositionSolve {
  Vec3 position = Vec3::Zero();  // B = X^{-1} A / 2
  double residual = 0.0;         // ||X B - A/2||
};

PositionSolve solve_position(const SensorArray& sensors, const Vec3& A);

// Sub-grid refinement of the six arrival times for clean (noise-free) data.
// The post-arrival amplitude of each trace pins t_i * h_i(0); a Newton solve
// in (b(0), b'(0)) makes the six amplitudes and the six ranges consistent,
// recovering the arrival instants well below the sample spacing. Falls back
// to the detected arrivals (refined = false) when the solve does not
// converge, and always clamps into the detection brackets.
struct ArrivalRefinement {
  std::array<ArrivalTime, 6> arrivals;
  Vec3 b0 = Vec3::Zero();
  Vec3 v0 = Vec3::Zero();
  bool refined = false;
  double residual = 0.0;
};

ArrivalRefinement refine_arrivals(const std::array<FieldTrace, 6>& traces,
                                  const SensorArray& sensors,
                                  const std::array<ArrivalTime, 6>& detected,
                                  const PhysicsConfig& cfg);

struct TauDiagnostics {
  double tau = 0.0;
  double range_residual = 0.0;  // max_i | |x_i - b_hat| - c (t_i,tau - tau) |
  double solve_residual = 0.0;  // ||X B - A/2||
};

struct ReconstructionReport {
  std::vector<double> tau_grid;          // accepted tau values
  std::vector<Vec3> b_hat;               // reconstructed positions, same length
  std::vector<double> dropped_taus;      // requested but beyond some curve range
  Vec3 b0_hat = Vec3::Zero();
  std::array<ArrivalTime, 6> per_sensor_arrivals{};
  std::vector<TauDiagnostics> diagnostics;
  std::array<RetardedTimeCurve, 6> curves;
  bool arrivals_refined = false;
  std::optional<double> error_sup;  // sup |b_hat - b| when ground truth given
};

struct ReconstructOptions {
  ThresholdSpec thresholds;          // abs_floor <= 0 picks default_abs_floor
  enum class Refine { automatic, on, off };
  Refine refine = Refine::automatic;  // automatic: refine only noiseless data
  double mono_tol = -1.0;
  int threads = 1;
};

// Runs the five reconstruction steps: arrival detection per sensor, curve
// integration per sensor, curve inversion per sensor and tau, assembly of the
// paired difference system, and the position solve. Tau values outside any
// curve's range are dropped and reported.
ReconstructionReport reconstruct_trajectory(const std::array<FieldTrace, 6>& traces,
                                            const SensorArray& sensors, const PhysicsConfig& cfg,
                                            const DomainSpec& dom,
                                            const std::vector<double>& tau_grid,
                                            const ReconstructOptions& options = {},
                                            const Trajectory* ground_truth = nullptr);

}  // namespace retrace
