#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "retrace/inverse.hpp"

namespace retrace {

// Closed-form constants of the Lipschitz estimates. The curve and trajectory
// constants are reported as the explicit envelope assembled from the proof
// steps (arrival term, drive term, Gronwall amplification); the envelope is
// an upper bound, not a sharp constant.
struct StabilityConstants {
  double c_t = 0.0;                    // 8 pi T_obs diam(Omega) / lambda
  double c_r_prefactor_arrival = 0.0;  // 8 pi T_obs diam(Omega) / (lambda h0)
  double c_r_prefactor_drive = 0.0;    // 8 pi c T_obs^2 / lambda
  double c_r_exp_factor = 0.0;         // exp(c T_obs / (dist(Gamma,D) h0))
  double c_r_envelope = 0.0;           // 2*arrival + (arrival + drive)*exp_factor
  double norm_x_inv_inf = 0.0;         // max row sum of |X^{-1}|
  double c_b_scale = 0.0;              // c^2 T_obs ||X^{-1}||_inf
  double c_b_envelope = 0.0;           // 2 c_b_scale * c_r_envelope
};

StabilityConstants theoretical_bounds(const HorizonConstants& hc, const PhysicsConfig& cfg,
                                      const SensorArray& sensors);

struct ExperimentSetup {
  SensorArray sensors;
  PhysicsConfig cfg;
  DomainSpec dom;
  double dt = 1e-3;
  std::vector<double> tau_grid;
  ReconstructOptions recon;
  int threads = 1;
};

// Outcome of one clean-data pair of observations.
struct PerturbationResult {
  double delta_phi_sup = 0.0;                 // sup over sensors and times
  std::array<double, 6> delta_phi = {};       // per-sensor sup |phi - phi~|
  std::array<double, 6> delta_t = {};         // |t_x - t~_x|
  std::array<double, 6> delta_r_sup = {};     // sup |r - r~| (zero-extended)
  double delta_b_sup = 0.0;                   // sup over common tau
  double ratio_t = 0.0;                       // max delta_t / delta_phi_sup
  double ratio_r = 0.0;
  double ratio_b = 0.0;
  bool arrival_bound_pass = true;   // per-sensor |t_x - t~_x| <= c_t ||phi - phi~||
  double arrival_bound_margin = 0.0;  // max_i delta_t / (c_t delta_phi_i)
};

// Synthesizes noiseless traces for both trajectories, runs both inversions,
// and compares every stage. Checks the arrival-time inequality per sensor
// against the closed-form constant.
PerturbationResult pair_experiment(const Trajectory& traj, const Trajectory& traj_tilde,
                                   const ExperimentSetup& setup);

struct NoiseRun {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double delta_phi_sup = 0.0;
  double delta_t_max = 0.0;
  double delta_r_max = 0.0;
  double delta_b_sup = 0.0;
  std::string status = "ok";  // or the error name of the failed step
};

struct NoiseSigmaStats {
  double sigma = 0.0;
  int ok_runs = 0;
  int failed_runs = 0;
  double median_delta_b = 0.0;
  double max_delta_b = 0.0;
};

struct NoiseSweep {
  std::vector<NoiseRun> runs;
  std::vector<NoiseSigmaStats> stats;
};

// Perturbs the traces with seeded Gaussian noise and compares each
// reconstruction against the clean ground truth. Per-run failures are
// recorded in the table instead of aborting the sweep.
NoiseSweep noise_sweep(const Trajectory& traj, const ExperimentSetup& setup,
                       const std::vector<double>& sigmas, int seeds_per_sigma,
                       std::uint64_t base_seed = 1);

}  // namespace retrace
