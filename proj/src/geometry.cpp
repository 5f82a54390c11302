#include "retrace/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "retrace/rng.hpp"

namespace retrace {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

void PhysicsConfig::validate() const {
  if (!(c > 0.0)) raise(errc::config_invalid, "wave speed c must be positive");
  if (!(lambda > 0.0)) raise(errc::config_invalid, "intensity lambda must be positive");
  if (!(T > 0.0)) raise(errc::config_invalid, "trajectory horizon T must be positive");
  if (!(c0_bound >= 0.0) || !(c0_bound < c))
    raise(errc::config_invalid,
          "subsonic bound must satisfy 0 <= c0_bound < c (got c0_bound=" + fmt(c0_bound) +
              ", c=" + fmt(c) + ")");
}

void DomainSpec::validate() const {
  if (!(d_radius > 0.0) || !(omega_radius > 0.0))
    raise(errc::config_invalid, "domain radii must be positive");
  const double off = (d_center - omega_center).norm();
  if (!(off + d_radius < omega_radius))
    raise(errc::config_invalid,
          "source ball must lie strictly inside the observation ball (offset " + fmt(off) +
              " + d_radius " + fmt(d_radius) + " >= omega_radius " + fmt(omega_radius) + ")");
}

const char* trajectory_kind_name(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::stationary: return "stationary";
    case TrajectoryKind::linear: return "linear";
    case TrajectoryKind::circular: return "circular";
    case TrajectoryKind::helical: return "helical";
    case TrajectoryKind::polynomial: return "polynomial";
    case TrajectoryKind::sampled: return "sampled";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_name(const std::string& name) {
  if (name == "stationary") return TrajectoryKind::stationary;
  if (name == "linear") return TrajectoryKind::linear;
  if (name == "circular") return TrajectoryKind::circular;
  if (name == "helical") return TrajectoryKind::helical;
  if (name == "polynomial") return TrajectoryKind::polynomial;
  if (name == "sampled") return TrajectoryKind::sampled;
  raise(errc::config_invalid, "unknown trajectory kind '" + name + "'");
}

// Natural cubic spline per component; C^2 with analytic derivative.
struct Trajectory::Spline {
  std::vector<double> t;
  std::array<std::vector<double>, 3> y;
  std::array<std::vector<double>, 3> m;  // second derivatives at the knots

  Spline(std::vector<double> times, const std::vector<Vec3>& pos) : t(std::move(times)) {
    const std::size_t n = t.size();
    for (int c = 0; c < 3; ++c) {
      y[c].resize(n);
      for (std::size_t i = 0; i < n; ++i) y[c][i] = pos[i][c];
      m[c] = solve_second_derivatives(y[c]);
    }
  }

  std::vector<double> solve_second_derivatives(const std::vector<double>& v) const {
    const std::size_t n = t.size();
    std::vector<double> m2(n, 0.0);
    if (n < 3) return m2;
    // Thomas algorithm on the interior tridiagonal system.
    const std::size_t k = n - 2;
    std::vector<double> diag(k), rhs(k), upper(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double h0 = t[i + 1] - t[i];
      const double h1 = t[i + 2] - t[i + 1];
      diag[i] = 2.0 * (h0 + h1);
      upper[i] = h1;
      rhs[i] = 6.0 * ((v[i + 2] - v[i + 1]) / h1 - (v[i + 1] - v[i]) / h0);
    }
    for (std::size_t i = 1; i < k; ++i) {
      const double lower = t[i + 1] - t[i];
      const double w = lower / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m2[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i > 0; --i)
      m2[i] = (rhs[i - 1] - upper[i - 1] * m2[i + 1]) / diag[i - 1];
    return m2;
  }

  std::size_t interval(double s) const {
    const auto it = std::upper_bound(t.begin(), t.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - t.begin());
    return std::min(t.size() - 2, j == 0 ? std::size_t{0} : j - 1);
  }

  double eval(int c, double s) const {
    const std::size_t i = interval(s);
    const double h = t[i + 1] - t[i];
    const double a = (t[i + 1] - s) / h, b = (s - t[i]) / h;
    return a * y[c][i] + b * y[c][i + 1] +
           ((a * a * a - a) * m[c][i] + (b * b * b - b) * m[c][i + 1]) * h * h / 6.0;
  }

  double deriv(int c, double s) const {
    const std::size_t i = interval(s);
    const double h = t[i + 1] - t[i];
    const double a = (t[i + 1] - s) / h, b = (s - t[i]) / h;
    return (y[c][i + 1] - y[c][i]) / h +
           ((3.0 * b * b - 1.0) * m[c][i + 1] - (3.0 * a * a - 1.0) * m[c][i]) * h / 6.0;
  }
};

Trajectory Trajectory::stationary(const Vec3& position) {
  Trajectory tr;
  tr.kind_ = TrajectoryKind::stationary;
  tr.coefficients_ = {position};
  return tr;
}

Trajectory Trajectory::linear(const Vec3& origin, const Vec3& velocity) {
  Trajectory tr;
  tr.kind_ = TrajectoryKind::linear;
  tr.coefficients_ = {origin, velocity};
  return tr;
}

Trajectory Trajectory::circular(const Vec3& center, double radius, double omega, double phase) {
  Trajectory tr;
  tr.kind_ = TrajectoryKind::circular;
  tr.center_ = center;
  tr.radius_ = radius;
  tr.omega_ = omega;
  tr.phase_ = phase;
  return tr;
}

Trajectory Trajectory::helical(const Vec3& center, double radius, double omega,
                               double axial_velocity, double phase) {
  Trajectory tr = circular(center, radius, omega, phase);
  tr.kind_ = TrajectoryKind::helical;
  tr.axial_velocity_ = axial_velocity;
  return tr;
}

Trajectory Trajectory::polynomial(std::vector<Vec3> coefficients) {
  if (coefficients.empty())
    raise(errc::config_invalid, "polynomial trajectory needs at least one coefficient");
  Trajectory tr;
  tr.kind_ = TrajectoryKind::polynomial;
  tr.coefficients_ = std::move(coefficients);
  return tr;
}

Trajectory Trajectory::sampled(std::vector<double> times, std::vector<Vec3> positions) {
  if (times.size() != positions.size() || times.size() < 2)
    raise(errc::config_invalid, "sampled trajectory needs matching times/positions, at least 2");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i] < times[i + 1]))
      raise(errc::config_invalid, "sampled trajectory times must be strictly increasing");
  Trajectory tr;
  tr.kind_ = TrajectoryKind::sampled;
  tr.sample_times_ = times;
  tr.sample_positions_ = positions;
  tr.spline_ = std::make_shared<const Spline>(std::move(times), positions);
  return tr;
}

Vec3 Trajectory::position(double t) const {
  switch (kind_) {
    case TrajectoryKind::stationary:
      return coefficients_[0];
    case TrajectoryKind::linear:
      return coefficients_[0] + t * coefficients_[1];
    case TrajectoryKind::circular:
    case TrajectoryKind::helical: {
      const double a = omega_ * t + phase_;
      Vec3 p = center_;
      p.x() += radius_ * std::cos(a);
      p.y() += radius_ * std::sin(a);
      p.z() += axial_velocity_ * t;
      return p;
    }
    case TrajectoryKind::polynomial: {
      Vec3 p = Vec3::Zero();
      for (std::size_t k = coefficients_.size(); k-- > 0;) p = coefficients_[k] + t * p;
      return p;
    }
    case TrajectoryKind::sampled: {
      const double s = std::clamp(t, sample_times_.front(), sample_times_.back());
      return Vec3(spline_->eval(0, s), spline_->eval(1, s), spline_->eval(2, s));
    }
  }
  return Vec3::Zero();
}

Vec3 Trajectory::velocity(double t) const {
  switch (kind_) {
    case TrajectoryKind::stationary:
      return Vec3::Zero();
    case TrajectoryKind::linear:
      return coefficients_[1];
    case TrajectoryKind::circular:
    case TrajectoryKind::helical: {
      const double a = omega_ * t + phase_;
      return Vec3(-radius_ * omega_ * std::sin(a), radius_ * omega_ * std::cos(a),
                  axial_velocity_);
    }
    case TrajectoryKind::polynomial: {
      Vec3 p = Vec3::Zero();
      for (std::size_t k = coefficients_.size(); k-- > 1;)
        p = static_cast<double>(k) * coefficients_[k] + t * p;
      return p;
    }
    case TrajectoryKind::sampled: {
      const double s = std::clamp(t, sample_times_.front(), sample_times_.back());
      return Vec3(spline_->deriv(0, s), spline_->deriv(1, s), spline_->deriv(2, s));
    }
  }
  return Vec3::Zero();
}

Vec3 Trajectory::position_clamped(double t, double T) const {
  return position(std::clamp(t, 0.0, T));
}

Vec3 Trajectory::velocity_clamped(double t, double T) const {
  if (t < 0.0 || t > T) return Vec3::Zero();
  return velocity(t);
}

std::optional<double> Trajectory::analytic_speed_bound() const {
  switch (kind_) {
    case TrajectoryKind::stationary:
      return 0.0;
    case TrajectoryKind::linear:
      return coefficients_[1].norm();
    case TrajectoryKind::circular:
      return std::abs(radius_ * omega_);
    case TrajectoryKind::helical:
      return std::hypot(radius_ * omega_, axial_velocity_);
    default:
      return std::nullopt;
  }
}

Trajectory Trajectory::translated(const Vec3& delta) const {
  Trajectory tr = *this;
  switch (kind_) {
    case TrajectoryKind::stationary:
    case TrajectoryKind::linear:
      tr.coefficients_[0] += delta;
      break;
    case TrajectoryKind::circular:
    case TrajectoryKind::helical:
      tr.center_ += delta;
      break;
    case TrajectoryKind::polynomial:
      tr.coefficients_[0] += delta;
      break;
    case TrajectoryKind::sampled: {
      std::vector<Vec3> moved = sample_positions_;
      for (auto& p : moved) p += delta;
      return sampled(sample_times_, std::move(moved));
    }
  }
  return tr;
}

double validate_subsonic(const Trajectory& traj, const PhysicsConfig& cfg) {
  cfg.validate();
  double sup = 0.0;
  for (int i = 0; i < kSpeedProbes; ++i) {
    const double t = cfg.T * static_cast<double>(i) / (kSpeedProbes - 1);
    sup = std::max(sup, traj.velocity(t).norm());
  }
  if (const auto closed = traj.analytic_speed_bound()) sup = std::max(sup, *closed);
  if (sup >= cfg.c)
    raise(errc::not_subsonic, "source speed " + fmt(sup) + " reaches the wave speed " +
                                  fmt(cfg.c) + "; the retarded-time map is no longer unique");
  if (sup > cfg.c0_bound)
    raise(errc::bound_exceeded, "source speed " + fmt(sup) + " exceeds the declared bound " +
                                    fmt(cfg.c0_bound) + " (still below c=" + fmt(cfg.c) + ")");
  return sup;
}

SensorArray check_sensor_matrix(const std::array<Vec3, 6>& points, double scale) {
  for (const auto& p : points)
    if (!p.allFinite()) raise(errc::config_invalid, "sensor positions must be finite");
  if (scale <= 0.0) {
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j) scale = std::max(scale, (points[i] - points[j]).norm());
    if (scale <= 0.0) scale = 1.0;
  }

  SensorArray arr;
  arr.points = points;
  arr.pairing_matrix.row(0) = (points[1] - points[0]).transpose();
  arr.pairing_matrix.row(1) = (points[3] - points[2]).transpose();
  arr.pairing_matrix.row(2) = (points[5] - points[4]).transpose();
  arr.det_x = arr.pairing_matrix.determinant();

  Eigen::JacobiSVD<Mat3> svd(arr.pairing_matrix);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  arr.cond_x = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  arr.cond_warning = arr.cond_x > kConditionWarnCap;

  const double threshold = kSingularDetRel * scale * scale * scale;
  if (std::abs(arr.det_x) <= threshold)
    raise(errc::singular_pairing, "pairing matrix is numerically singular (|det| = " +
                                      fmt(std::abs(arr.det_x)) + " <= " + fmt(threshold) + ")");
  return arr;
}

HorizonConstants horizon_constants(const DomainSpec& dom, const PhysicsConfig& cfg) {
  dom.validate();
  cfg.validate();
  HorizonConstants hc;
  const double off = (dom.d_center - dom.omega_center).norm();
  hc.t0 = (dom.omega_radius + off + dom.d_radius) / cfg.c;
  hc.t_obs = cfg.T + hc.t0;
  hc.diam_omega = dom.diam_omega();
  hc.dist_gamma_d = dom.dist_gamma_d();
  hc.h0 = 1.0 - cfg.c0_bound / cfg.c;
  if (!(cfg.T > hc.t0))
    raise(errc::observation_too_short,
          "trajectory horizon T = " + fmt(cfg.T) + " does not exceed the wave travel bound " +
              fmt(hc.t0) + "; signals from the source cannot cover the sensors in time (need T > " +
              fmt(hc.t0) + ")");
  return hc;
}

SensorArray select_sensors(const DomainSpec& dom, int n_candidates, std::uint64_t seed) {
  dom.validate();
  if (n_candidates < 1) raise(errc::config_invalid, "n_candidates must be >= 1");
  std::array<Vec3, 6> best{};
  double best_det = -1.0;
  for (int cand = 0; cand < n_candidates; ++cand) {
    std::array<Vec3, 6> pts;
    for (int i = 0; i < 6; ++i)
      pts[i] = dom.omega_center +
               dom.omega_radius *
                   rng::unit_vector(seed, 0x53454e53ull, static_cast<std::uint64_t>(cand) * 6 + i);
    Mat3 X;
    X.row(0) = (pts[1] - pts[0]).transpose();
    X.row(1) = (pts[3] - pts[2]).transpose();
    X.row(2) = (pts[5] - pts[4]).transpose();
    const double d = std::abs(X.determinant());
    if (d > best_det) {
      best_det = d;
      best = pts;
    }
  }
  return check_sensor_matrix(best, dom.diam_omega());
}

double max_excursion(const Trajectory& traj, const Vec3& center, double T, int probes) {
  double sup = 0.0;
  for (int i = 0; i < probes; ++i) {
    const double t = T * static_cast<double>(i) / (probes - 1);
    sup = std::max(sup, (traj.position(t) - center).norm());
  }
  return sup;
}

void validate_scene(const Trajectory& traj, const PhysicsConfig& cfg, const DomainSpec& dom) {
  dom.validate();
  if (traj.kind() == TrajectoryKind::sampled &&
      (traj.sample_times().front() > 0.0 || traj.sample_times().back() < cfg.T))
    raise(errc::config_invalid, "sampled trajectory must cover [0, T]");
  validate_subsonic(traj, cfg);
  const double reach = max_excursion(traj, dom.d_center, cfg.T);
  if (reach > dom.d_radius)
    raise(errc::trajectory_outside_domain, "trajectory leaves the source ball (max excursion " +
                                               fmt(reach) + " > radius " + fmt(dom.d_radius) + ")");
}

}  // namespace retrace
