#include "retrace/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "retrace/interp.hpp"

namespace retrace {

namespace {

constexpr double kEightPi = 8.0 * std::numbers::pi;

CubicHermite curve_interp(const RetardedTimeCurve& c) {
  return CubicHermite::monotone(c.t_grid, c.r_values);
}

}  // namespace

StabilityConstants theoretical_bounds(const HorizonConstants& hc, const PhysicsConfig& cfg,
                                      const SensorArray& sensors) {
  StabilityConstants sc;
  sc.c_t = kEightPi * hc.t_obs * hc.diam_omega / cfg.lambda;
  sc.c_r_prefactor_arrival = sc.c_t / hc.h0;
  sc.c_r_prefactor_drive = kEightPi * cfg.c * hc.t_obs * hc.t_obs / cfg.lambda;
  sc.c_r_exp_factor = std::exp(cfg.c * hc.t_obs / (hc.dist_gamma_d * hc.h0));
  sc.c_r_envelope = 2.0 * sc.c_r_prefactor_arrival +
                    (sc.c_r_prefactor_arrival + sc.c_r_prefactor_drive) * sc.c_r_exp_factor;
  const Mat3 inv = sensors.pairing_matrix.inverse();
  sc.norm_x_inv_inf = inv.cwiseAbs().rowwise().sum().maxCoeff();
  sc.c_b_scale = cfg.c * cfg.c * hc.t_obs * sc.norm_x_inv_inf;
  sc.c_b_envelope = 2.0 * sc.c_b_scale * sc.c_r_envelope;
  return sc;
}

PerturbationResult pair_experiment(const Trajectory& traj, const Trajectory& traj_tilde,
                                   const ExperimentSetup& setup) {
  validate_scene(traj, setup.cfg, setup.dom);
  validate_scene(traj_tilde, setup.cfg, setup.dom);
  const HorizonConstants hc = horizon_constants(setup.dom, setup.cfg);
  const StabilityConstants sc = theoretical_bounds(hc, setup.cfg, setup.sensors);

  const auto traces =
      synthesize_traces(traj, setup.sensors, setup.cfg, setup.dom, setup.dt, 0.0, 0, setup.threads);
  const auto traces_t = synthesize_traces(traj_tilde, setup.sensors, setup.cfg, setup.dom,
                                          setup.dt, 0.0, 0, setup.threads);

  PerturbationResult res;
  for (int i = 0; i < 6; ++i) {
    double sup = 0.0;
    for (std::size_t k = 0; k < traces[i].values.size(); ++k)
      sup = std::max(sup, std::abs(traces[i].values[k] - traces_t[i].values[k]));
    res.delta_phi[i] = sup;
    res.delta_phi_sup = std::max(res.delta_phi_sup, sup);
  }

  const auto report =
      reconstruct_trajectory(traces, setup.sensors, setup.cfg, setup.dom, setup.tau_grid,
                             setup.recon, &traj);
  const auto report_t =
      reconstruct_trajectory(traces_t, setup.sensors, setup.cfg, setup.dom, setup.tau_grid,
                             setup.recon, &traj_tilde);

  res.arrival_bound_pass = true;
  res.arrival_bound_margin = 0.0;
  for (int i = 0; i < 6; ++i) {
    res.delta_t[i] =
        std::abs(report.per_sensor_arrivals[i].t_x - report_t.per_sensor_arrivals[i].t_x);
    if (res.delta_phi[i] > 0.0) {
      const double margin = res.delta_t[i] / (sc.c_t * res.delta_phi[i]);
      res.arrival_bound_margin = std::max(res.arrival_bound_margin, margin);
      if (margin > 1.0) res.arrival_bound_pass = false;
    } else if (res.delta_t[i] > 0.0) {
      res.arrival_bound_pass = false;
    }

    // Curves evaluated on the union of both node sets; each interpolant
    // clamps to r = 0 before its own arrival.
    const CubicHermite ra = curve_interp(report.curves[i]);
    const CubicHermite rb = curve_interp(report_t.curves[i]);
    double sup = 0.0;
    for (const double t : report.curves[i].t_grid) sup = std::max(sup, std::abs(ra(t) - rb(t)));
    for (const double t : report_t.curves[i].t_grid) sup = std::max(sup, std::abs(ra(t) - rb(t)));
    res.delta_r_sup[i] = sup;
  }

  // Positions compared on the tau values both reconstructions accepted.
  {
    std::size_t ka = 0, kb = 0;
    double sup = 0.0;
    while (ka < report.tau_grid.size() && kb < report_t.tau_grid.size()) {
      const double ta = report.tau_grid[ka], tb = report_t.tau_grid[kb];
      if (ta == tb) {
        sup = std::max(sup, (report.b_hat[ka] - report_t.b_hat[kb]).norm());
        ++ka;
        ++kb;
      } else if (ta < tb) {
        ++ka;
      } else {
        ++kb;
      }
    }
    res.delta_b_sup = sup;
  }

  if (res.delta_phi_sup > 0.0) {
    res.ratio_t = *std::max_element(res.delta_t.begin(), res.delta_t.end()) / res.delta_phi_sup;
    res.ratio_r =
        *std::max_element(res.delta_r_sup.begin(), res.delta_r_sup.end()) / res.delta_phi_sup;
    res.ratio_b = res.delta_b_sup / res.delta_phi_sup;
  }
  return res;
}

NoiseSweep noise_sweep(const Trajectory& traj, const ExperimentSetup& setup,
                       const std::vector<double>& sigmas, int seeds_per_sigma,
                       std::uint64_t base_seed) {
  validate_scene(traj, setup.cfg, setup.dom);
  if (seeds_per_sigma < 1) raise(errc::config_invalid, "seeds_per_sigma must be >= 1");

  const auto clean =
      synthesize_traces(traj, setup.sensors, setup.cfg, setup.dom, setup.dt, 0.0, 0, setup.threads);

  // Ground truth for arrivals and curves straight from the known trajectory.
  std::array<double, 6> true_arrival;
  for (int i = 0; i < 6; ++i)
    true_arrival[i] = (setup.sensors.points[i] - traj.position(0.0)).norm() / setup.cfg.c;

  NoiseSweep sweep;
  for (const double sigma : sigmas) {
    NoiseSigmaStats stats;
    stats.sigma = sigma;
    std::vector<double> b_errors;
    for (int j = 0; j < seeds_per_sigma; ++j) {
      NoiseRun run;
      run.sigma = sigma;
      run.seed = base_seed + static_cast<std::uint64_t>(j);
      try {
        const auto noisy = synthesize_traces(traj, setup.sensors, setup.cfg, setup.dom, setup.dt,
                                             sigma, run.seed, setup.threads);
        for (int i = 0; i < 6; ++i)
          for (std::size_t k = 0; k < noisy[i].values.size(); ++k)
            run.delta_phi_sup = std::max(
                run.delta_phi_sup, std::abs(noisy[i].values[k] - clean[i].values[k]));

        const auto report = reconstruct_trajectory(noisy, setup.sensors, setup.cfg, setup.dom,
                                                   setup.tau_grid, setup.recon, &traj);
        run.delta_b_sup = report.error_sup.value_or(0.0);
        RetardedSolve solver;
        solver.tol = 1e-12 * clean[0].t_end();
        for (int i = 0; i < 6; ++i) {
          run.delta_t_max = std::max(
              run.delta_t_max, std::abs(report.per_sensor_arrivals[i].t_x - true_arrival[i]));
          const auto& curve = report.curves[i];
          // Compare against the direct retarded-time solve on a thinned grid.
          const std::size_t stride = std::max<std::size_t>(1, curve.t_grid.size() / 512);
          for (std::size_t k = 0; k < curve.t_grid.size(); k += stride) {
            const double rt =
                retarded_time(traj, setup.sensors.points[i], curve.t_grid[k], setup.cfg, solver).r;
            run.delta_r_max =
                std::max(run.delta_r_max, std::abs(curve.r_values[k] - std::max(0.0, rt)));
          }
        }
        b_errors.push_back(run.delta_b_sup);
        ++stats.ok_runs;
      } catch (const error& e) {
        run.status = errc_name(e.code());
        ++stats.failed_runs;
      }
      sweep.runs.push_back(std::move(run));
    }
    if (!b_errors.empty()) {
      std::sort(b_errors.begin(), b_errors.end());
      stats.median_delta_b = b_errors[b_errors.size() / 2];
      stats.max_delta_b = b_errors.back();
    }
    sweep.stats.push_back(stats);
  }
  return sweep;
}

}  // namespace retrace
