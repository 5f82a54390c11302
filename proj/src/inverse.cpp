#include "retrace/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "retrace/interp.hpp"
#include "retrace/ode.hpp"

namespace retrace {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Index of the first sample of the detected post-arrival run, recovered from
// the midpoint convention of detect_arrival.
std::size_t first_hot_index(const FieldTrace& trace, const ArrivalTime& arrival) {
  const double k = (arrival.t_x + 0.5 * trace.dt) / trace.dt;
  const auto idx = std::llround(k);
  return static_cast<std::size_t>(std::max<std::int64_t>(0, idx));
}

double sensor_scale(const std::array<Vec3, 6>& points) {
  double scale = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) scale = std::max(scale, (points[i] - points[j]).norm());
  return scale > 0.0 ? scale : 1.0;
}

}  // namespace

double default_abs_floor(const PhysicsConfig& cfg, const DomainSpec& dom) {
  return 1e-12 * cfg.lambda / (kFourPi * dom.dist_gamma_d());
}

ArrivalTime detect_arrival(const FieldTrace& trace, const ThresholdSpec& spec) {
  if (trace.values.empty()) raise(errc::config_invalid, "empty trace");
  if (spec.hold < 1) raise(errc::config_invalid, "hold must be >= 1");
  const double theta = std::max(spec.abs_floor, spec.k_sigma * trace.noise_sigma);

  const std::size_t n = trace.values.size();
  std::size_t run = 0;
  for (std::size_t k = 0; k < n; ++k) {
    run = trace.values[k] > theta ? run + 1 : 0;
    if (run == static_cast<std::size_t>(spec.hold)) {
      const std::size_t start = k + 1 - run;
      // The sample before the first qualifying run is below threshold, else
      // the run would have started earlier.
      const double t_hot = trace.time(start);
      const double t_quiet = start > 0 ? trace.time(start - 1) : t_hot - trace.dt;
      ArrivalTime a;
      a.t_x = 0.5 * (t_quiet + t_hot);
      a.detection_margin = 0.5 * spec.hold * trace.dt + trace.dt;
      return a;
    }
  }
  raise(errc::no_arrival, "no run of " + std::to_string(spec.hold) +
                              " samples above threshold " + fmt(theta) +
                              "; recording too short or signal buried in noise");
}

Vec3 estimate_initial_position(const SensorArray& sensors,
                               const std::array<ArrivalTime, 6>& arrivals, double c) {
  std::array<double, 6> t0s;
  for (int i = 0; i < 6; ++i) t0s[i] = arrivals[i].t_x;
  const Vec3 A = assemble_rhs(sensors, t0s, 0.0, c);
  return solve_position(sensors, A).position;
}

RetardedTimeCurve integrate_retarded_curve(const FieldTrace& trace, const ArrivalTime& arrival,
                                           const PhysicsConfig& cfg, double mono_tol) {
  if (trace.values.size() < 8) raise(errc::config_invalid, "trace too short to integrate");
  const double t_end = trace.t_end();
  const double t_x = arrival.t_x;
  if (!(t_x >= 0.0) || t_x >= t_end)
    raise(errc::out_of_range, "arrival time " + fmt(t_x) + " outside the recorded window");

  // First grid index at or after the arrival.
  const double eps = 1e-9 * trace.dt;
  std::size_t s = static_cast<std::size_t>(std::max(0.0, std::ceil((t_x - eps) / trace.dt)));
  if (trace.time(s) < t_x - eps) ++s;
  if (s + 3 >= trace.values.size())
    raise(errc::out_of_range, "fewer than four samples beyond the arrival");

  double max_abs = 0.0;
  for (std::size_t k = s; k < trace.values.size(); ++k)
    max_abs = std::max(max_abs, std::abs(trace.values[k]));
  const double neg_floor =
      std::max(5.0 * trace.noise_sigma, 1e-12 * std::max(1.0, max_abs));
  for (std::size_t k = s; k < trace.values.size(); ++k)
    if (trace.values[k] < -neg_floor)
      raise(errc::negative_field, "trace sample " + std::to_string(k) + " = " +
                                      fmt(trace.values[k]) + " below -" + fmt(neg_floor));

  // Post-arrival samples, interpolated shape-preservingly; the sliver between
  // t_x and the first sample uses the smooth branch extrapolated backward so
  // the arrival jump never enters the integrand.
  std::vector<double> ts(trace.values.size() - s), vs(trace.values.size() - s);
  for (std::size_t k = s; k < trace.values.size(); ++k) {
    ts[k - s] = trace.time(k);
    vs[k - s] = trace.values[k];
  }
  const CubicHermite phi = CubicHermite::monotone(ts, vs);
  double stencil_t[4], stencil_v[4];
  for (int j = 0; j < 4; ++j) {
    stencil_t[j] = ts[j];
    stencil_v[j] = vs[j];
  }
  const Cubic4 branch(stencil_t, stencil_v);
  double branch_lo = stencil_v[0], branch_hi = stencil_v[0];
  for (int j = 1; j < 4; ++j) {
    branch_lo = std::min(branch_lo, stencil_v[j]);
    branch_hi = std::max(branch_hi, stencil_v[j]);
  }
  // The extrapolated branch may legitimately leave the stencil's value range
  // (the field is usually monotone right after arrival), so the guard band
  // against noisy blow-ups is one full range wide on either side.
  const double band = branch_hi - branch_lo;
  branch_lo -= band;
  branch_hi += band;

  const double t_first = ts.front();
  auto phi_model = [&](double t) {
    if (t < t_first) return std::clamp(branch(t), branch_lo, branch_hi);
    return phi(t);
  };
  const double gain = kFourPi * cfg.c / cfg.lambda;
  auto rhs = [&](double t, double r) { return gain * phi_model(t) * std::max(0.0, t - r); };

  if (mono_tol < 0.0)
    mono_tol = gain * t_end * (6.0 * trace.noise_sigma) * trace.dt + 1e-12 * t_end;

  // Stop a few samples short of the emission time reaching T: past that point
  // the frozen trajectory continuation makes the recorded field jump, and the
  // interpolation stencils that touch the jump would spoil the high-order
  // accuracy of the tail. The discarded sliver only affects tau right at T.
  const double h0 = 1.0 - cfg.c0_bound / cfg.c;
  double stop_r = cfg.T - 4.0 * trace.dt / h0;
  if (!(stop_r > 0.25 * cfg.T)) stop_r = cfg.T;

  RetardedTimeCurve curve;
  curve.sensor_index = trace.sensor_index;
  const bool merged_start = trace.time(s) - t_x <= eps;
  const std::size_t n_nodes = (trace.values.size() - s) + (merged_start ? 0 : 1);
  curve.t_grid.reserve(n_nodes);
  curve.r_values.reserve(n_nodes);
  curve.t_grid.push_back(merged_start ? trace.time(s) : t_x);
  curve.r_values.push_back(0.0);

  double r = 0.0;
  double t = curve.t_grid.front();
  for (std::size_t k = merged_start ? s + 1 : s; k < trace.values.size(); ++k) {
    const double t_next = trace.time(k);
    const double h = t_next - t;
    double r_next = rk4_step(rhs, t, r, h);
    if (r_next < r) {
      if (r - r_next > mono_tol)
        raise(errc::monotonicity_violation,
              "emission-time curve decreased by " + fmt(r - r_next) + " at t = " + fmt(t_next) +
                  " (tolerance " + fmt(mono_tol) + "); noise level incompatible with integration");
      r_next = r;
    }
    if (r_next >= stop_r) break;
    curve.t_grid.push_back(t_next);
    curve.r_values.push_back(r_next);
    t = t_next;
    r = r_next;
  }
  return curve;
}

double invert_curve(const RetardedTimeCurve& curve, double tau) {
  if (curve.t_grid.size() < 2) raise(errc::config_invalid, "curve too short to invert");
  const double t_obs = curve.t_grid.back();
  const double tol = 1e-12 * t_obs;
  const double r_max = curve.r_values.back();
  if (tau < -tol)
    raise(errc::out_of_range, "tau = " + fmt(tau) + " is negative");
  if (tau > r_max)
    raise(errc::out_of_range, "tau = " + fmt(tau) + " beyond the curve range " + fmt(r_max) +
                                  "; observation window too short for this tau");

  // First node at or above tau bounds the leftmost crossing.
  const auto it = std::lower_bound(curve.r_values.begin(), curve.r_values.end(), tau);
  const std::size_t k = static_cast<std::size_t>(it - curve.r_values.begin());
  if (k == 0) return curve.t_grid.front();

  const CubicHermite interp = CubicHermite::monotone(curve.t_grid, curve.r_values);
  return bisect_leftmost(interp, curve.t_grid[k - 1], curve.t_grid[k], tau, tol);
}

Vec3 assemble_rhs(const SensorArray& sensors, const std::array<double, 6>& t_taus, double tau,
                  double c) {
  std::array<double, 6> ranges;
  for (int i = 0; i < 6; ++i) {
    const double dt = t_taus[i] - tau;
    if (dt < -1e-12 * std::max(1.0, std::abs(tau)))
      raise(errc::negative_range, "t_tau for sensor " + std::to_string(i + 1) +
                                      " precedes tau, giving a negative range");
    ranges[i] = c * std::max(0.0, dt);
  }
  Vec3 A;
  for (int row = 0; row < 3; ++row) {
    const int i = 2 * row, j = 2 * row + 1;
    A[row] = sensors.points[j].squaredNorm() - sensors.points[i].squaredNorm() +
             ranges[i] * ranges[i] - ranges[j] * ranges[j];
  }
  return A;
}

PositionSolve solve_position(const SensorArray& sensors, const Vec3& A) {
  const double scale = sensor_scale(sensors.points);
  const double threshold = kSingularDetRel * scale * scale * scale;
  const double det = sensors.pairing_matrix.determinant();
  if (std::abs(det) <= threshold)
    raise(errc::singular_pairing,
          "pairing matrix singular (|det| = " + fmt(std::abs(det)) + " <= " + fmt(threshold) + ")");
  PositionSolve out;
  const Vec3 half_a = 0.5 * A;
  out.position = sensors.pairing_matrix.partialPivLu().solve(half_a);
  out.residual = (sensors.pairing_matrix * out.position - half_a).norm();
  return out;
}

ArrivalRefinement refine_arrivals(const std::array<FieldTrace, 6>& traces,
                                  const SensorArray& sensors,
                                  const std::array<ArrivalTime, 6>& detected,
                                  const PhysicsConfig& cfg) {
  ArrivalRefinement out;
  out.arrivals = detected;
  out.refined = false;

  try {
    // Post-arrival amplitude model per sensor: G_i(t) = lambda / (4 pi c phi_i(t))
    // extrapolated back to the arrival instant equals t_i * h_i(0).
    std::array<std::optional<Cubic4>, 6> amp;
    std::array<double, 6> lo{}, hi{};
    for (int i = 0; i < 6; ++i) {
      const FieldTrace& tr = traces[i];
      const std::size_t s = first_hot_index(tr, detected[i]);
      if (s + 3 >= tr.values.size() || s < 1) return out;
      double xs[4], ys[4];
      for (int j = 0; j < 4; ++j) {
        const double v = tr.values[s + j];
        if (!(v > 0.0)) return out;
        xs[j] = tr.time(s + j);
        ys[j] = cfg.lambda / (kFourPi * cfg.c * v);
      }
      amp[i].emplace(xs, ys);
      lo[i] = tr.time(s - 1);
      hi[i] = tr.time(s);
    }

    Vec3 b0 = estimate_initial_position(sensors, detected, cfg.c);
    Vec3 v0 = Vec3::Zero();

    using Vec6 = Eigen::Matrix<double, 6, 1>;
    using Mat6 = Eigen::Matrix<double, 6, 6>;
    auto eval_residual = [&](const Vec3& b, const Vec3& v, Vec6& F) {
      for (int i = 0; i < 6; ++i) {
        const Vec3 diff = sensors.points[i] - b;
        const double d = diff.norm();
        if (d <= 0.0) return false;
        const double t_i = d / cfg.c;
        const Vec3 u = diff / d;
        const double h_i = 1.0 - v.dot(u) / cfg.c;
        F[i] = t_i * h_i - (*amp[i])(t_i);
      }
      return true;
    };

    Vec6 F;
    if (!eval_residual(b0, v0, F)) return out;
    double fnorm = F.lpNorm<Eigen::Infinity>();
    const double tol = 1e-13 * std::max(1.0, hi[0] + hi[5]);

    for (int iter = 0; iter < 40 && fnorm > tol; ++iter) {
      Mat6 J;
      for (int i = 0; i < 6; ++i) {
        const Vec3 diff = sensors.points[i] - b0;
        const double d = diff.norm();
        const double t_i = d / cfg.c;
        const Vec3 u = diff / d;
        const double h_i = 1.0 - v0.dot(u) / cfg.c;
        const double gp = amp[i]->derivative(t_i);
        const Vec3 db = (gp - h_i) / cfg.c * u + t_i / (cfg.c * d) * (v0 - u.dot(v0) * u);
        J.block<1, 3>(i, 0) = db.transpose();
        J.block<1, 3>(i, 3) = (-t_i / cfg.c) * u.transpose();
      }
      const Eigen::FullPivLU<Mat6> lu(J);
      // Symmetric sensor/source configurations make equal arrival times and a
      // rank-deficient system; the amplitudes then carry no sub-sample
      // information and the detected arrivals stand.
      if (!lu.isInvertible() || lu.rcond() < 1e-9) return out;
      Vec6 step = lu.solve(-F);

      // Backtracking keeps the iteration inside the residual's basin.
      double shrink = 1.0;
      Vec3 b_try, v_try;
      Vec6 F_try;
      bool improved = false;
      for (int bt = 0; bt < 6; ++bt, shrink *= 0.5) {
        b_try = b0 + shrink * step.head<3>();
        v_try = v0 + shrink * step.tail<3>();
        if (!eval_residual(b_try, v_try, F_try)) continue;
        if (F_try.lpNorm<Eigen::Infinity>() < fnorm) {
          improved = true;
          break;
        }
      }
      if (!improved) break;
      b0 = b_try;
      v0 = v_try;
      F = F_try;
      fnorm = F.lpNorm<Eigen::Infinity>();
    }

    if (fnorm > 1e3 * tol) return out;
    if (v0.norm() >= cfg.c) return out;

    // Accept only if every implied arrival stays near its detection bracket;
    // clamp strictly inside it so the integration stencil starts on the first
    // post-arrival sample.
    std::array<ArrivalTime, 6> refined = detected;
    for (int i = 0; i < 6; ++i) {
      const double t_i = (sensors.points[i] - b0).norm() / cfg.c;
      const double slack = 0.25 * traces[i].dt;
      if (t_i < lo[i] - slack || t_i > hi[i] + slack) return out;
      refined[i].t_x = std::clamp(t_i, lo[i] + 1e-3 * traces[i].dt, hi[i]);
    }
    out.arrivals = refined;
    out.b0 = b0;
    out.v0 = v0;
    out.residual = fnorm;
    out.refined = true;
    return out;
  } catch (const error&) {
    return out;
  }
}

ReconstructionReport reconstruct_trajectory(const std::array<FieldTrace, 6>& traces,
                                            const SensorArray& sensors, const PhysicsConfig& cfg,
                                            const DomainSpec& dom,
                                            const std::vector<double>& tau_grid,
                                            const ReconstructOptions& options,
                                            const Trajectory* ground_truth) {
  for (int i = 0; i < 6; ++i) {
    if (traces[i].values.size() != traces[0].values.size() || traces[i].dt != traces[0].dt)
      raise(errc::config_invalid, "traces must share one time grid");
  }
  horizon_constants(dom, cfg);  // rejects scenes whose recording cannot cover the path

  ThresholdSpec thresholds = options.thresholds;
  if (thresholds.abs_floor <= 0.0) thresholds.abs_floor = default_abs_floor(cfg, dom);

  ReconstructionReport report;

  // Step 1: arrival per sensor.
  std::array<ArrivalTime, 6> arrivals;
  for (int i = 0; i < 6; ++i) {
    try {
      arrivals[i] = detect_arrival(traces[i], thresholds);
    } catch (const error& e) {
      throw pipeline_error(e.code(), "detect_arrival", i + 1, e.what());
    }
  }

  // Optional sub-grid refinement; automatic mode restricts it to clean data,
  // where the amplitude extrapolation is trustworthy.
  bool noiseless = true;
  for (const auto& tr : traces) noiseless = noiseless && tr.noise_sigma == 0.0;
  if (options.refine == ReconstructOptions::Refine::on ||
      (options.refine == ReconstructOptions::Refine::automatic && noiseless)) {
    const ArrivalRefinement ref = refine_arrivals(traces, sensors, arrivals, cfg);
    arrivals = ref.arrivals;
    report.arrivals_refined = ref.refined;
  }
  report.per_sensor_arrivals = arrivals;

  // Initial position from the arrival ranges.
  try {
    report.b0_hat = estimate_initial_position(sensors, arrivals, cfg.c);
  } catch (const error& e) {
    throw pipeline_error(e.code(), "estimate_initial_position", 0, e.what());
  }

  // Step 3: emission-time curves.
  for (int i = 0; i < 6; ++i) {
    try {
      report.curves[i] = integrate_retarded_curve(traces[i], arrivals[i], cfg, options.mono_tol);
    } catch (const error& e) {
      throw pipeline_error(e.code(), "integrate_retarded_curve", i + 1, e.what());
    }
  }

  // Steps 4-5: invert each curve at each tau, assemble, solve.
  std::array<CubicHermite, 6> inverters{
      CubicHermite::monotone(report.curves[0].t_grid, report.curves[0].r_values),
      CubicHermite::monotone(report.curves[1].t_grid, report.curves[1].r_values),
      CubicHermite::monotone(report.curves[2].t_grid, report.curves[2].r_values),
      CubicHermite::monotone(report.curves[3].t_grid, report.curves[3].r_values),
      CubicHermite::monotone(report.curves[4].t_grid, report.curves[4].r_values),
      CubicHermite::monotone(report.curves[5].t_grid, report.curves[5].r_values)};

  double reachable = std::numeric_limits<double>::infinity();
  for (const auto& c : report.curves) reachable = std::min(reachable, c.r_values.back());

  for (const double tau : tau_grid) {
    if (tau < 0.0 || tau > reachable) {
      report.dropped_taus.push_back(tau);
      continue;
    }
    std::array<double, 6> t_taus;
    for (int i = 0; i < 6; ++i) {
      const auto& grid = report.curves[i].t_grid;
      const auto& rv = report.curves[i].r_values;
      const double t_obs = grid.back();
      const auto it = std::lower_bound(rv.begin(), rv.end(), tau);
      const std::size_t k = static_cast<std::size_t>(it - rv.begin());
      t_taus[i] = k == 0 ? grid.front()
                         : bisect_leftmost(inverters[i], grid[k - 1], grid[k], tau,
                                           1e-12 * t_obs);
    }
    try {
      const Vec3 A = assemble_rhs(sensors, t_taus, tau, cfg.c);
      const PositionSolve ps = solve_position(sensors, A);
      report.tau_grid.push_back(tau);
      report.b_hat.push_back(ps.position);
      TauDiagnostics diag;
      diag.tau = tau;
      diag.solve_residual = ps.residual;
      for (int i = 0; i < 6; ++i) {
        const double range = cfg.c * (t_taus[i] - tau);
        diag.range_residual = std::max(
            diag.range_residual, std::abs((sensors.points[i] - ps.position).norm() - range));
      }
      report.diagnostics.push_back(diag);
    } catch (const error& e) {
      throw pipeline_error(e.code(), "solve_position", 0,
                           "tau = " + fmt(tau) + ": " + e.what());
    }
  }

  if (ground_truth) {
    double sup = 0.0;
    for (std::size_t k = 0; k < report.tau_grid.size(); ++k)
      sup = std::max(sup,
                     (report.b_hat[k] - ground_truth->position(report.tau_grid[k])).norm());
    report.error_sup = sup;
  }
  return report;
}

}  // namespace retrace
