#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "retrace/errors.hpp"

namespace retrace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Number of uniform probe times used when bounding trajectory speed and
// excursion on [0, T].
inline constexpr int kSpeedProbes = 10001;

// |det X| below this fraction of scale^3 is treated as singular.
inline constexpr double kSingularDetRel = 1e-9;

// Condition numbers above this are flagged as a conditioning warning.
inline constexpr double kConditionWarnCap = 1e6;

struct PhysicsConfig {
  double c = 1.0;         // wave speed
  double lambda = 1.0;    // source intensity
  double T = 1.0;         // trajectory horizon
  double c0_bound = 0.0;  // declared bound on the source speed

  void validate() const;
};

enum class TrajectoryKind { stationary, linear, circular, helical, polynomial, sampled };

const char* trajectory_kind_name(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_name(const std::string& name);

// Source path b(t) with derivative b'(t). Analytic families are defined for
// every t; sampled paths interpolate with a natural cubic spline (so b stays
// C^2) and are valid on their knot range only.
class Trajectory {
 public:
  static Trajectory stationary(const Vec3& position);
  static Trajectory linear(const Vec3& origin, const Vec3& velocity);
  static Trajectory circular(const Vec3& center, double radius, double omega, double phase = 0.0);
  static Trajectory helical(const Vec3& center, double radius, double omega,
                            double axial_velocity, double phase = 0.0);
  static Trajectory polynomial(std::vector<Vec3> coefficients);
  static Trajectory sampled(std::vector<double> times, std::vector<Vec3> positions);

  TrajectoryKind kind() const { return kind_; }

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;

  // Constant continuation outside [0, T]: position freezes, velocity is zero.
  Vec3 position_clamped(double t, double T) const;
  Vec3 velocity_clamped(double t, double T) const;

  // Closed-form sup |b'| where the family admits one.
  std::optional<double> analytic_speed_bound() const;

  // Rigid translation of the whole path; used by perturbation experiments.
  Trajectory translated(const Vec3& delta) const;

  // Accessors used by serialization.
  const std::vector<Vec3>& coefficients() const { return coefficients_; }
  const std::vector<double>& sample_times() const { return sample_times_; }
  const std::vector<Vec3>& sample_positions() const { return sample_positions_; }
  const Vec3& center() const { return center_; }
  double radius() const { return radius_; }
  double omega() const { return omega_; }
  double phase() const { return phase_; }
  double axial_velocity() const { return axial_velocity_; }

 private:
  Trajectory() = default;

  TrajectoryKind kind_ = TrajectoryKind::stationary;
  // circular / helical parameters (center doubles as position / origin)
  Vec3 center_ = Vec3::Zero();
  double radius_ = 0.0;
  double omega_ = 0.0;
  double phase_ = 0.0;
  double axial_velocity_ = 0.0;
  // stationary / linear / polynomial coefficients, b(t) = sum coeff_k t^k
  std::vector<Vec3> coefficients_;
  // sampled representation (natural cubic spline per component)
  std::vector<double> sample_times_;
  std::vector<Vec3> sample_positions_;
  struct Spline;
  std::shared_ptr<const Spline> spline_;
};

// Concentric-ball scene: the source stays inside the ball D, sensors sit on
// the boundary sphere of the ball Omega.
struct DomainSpec {
  Vec3 d_center = Vec3::Zero();
  double d_radius = 1.0;
  Vec3 omega_center = Vec3::Zero();
  double omega_radius = 3.0;

  void validate() const;
  double diam_omega() const { return 2.0 * omega_radius; }
  double dist_gamma_d() const {
    return omega_radius - (d_center - omega_center).norm() - d_radius;
  }
};

struct SensorArray {
  std::array<Vec3, 6> points;
  Mat3 pairing_matrix = Mat3::Zero();  // rows x2-x1, x4-x3, x6-x5
  double det_x = 0.0;
  double cond_x = 1.0;
  bool cond_warning = false;
};

struct HorizonConstants {
  double t0 = 0.0;            // wave travel bound sup |x-y|/c over sensors x, source region y
  double t_obs = 0.0;         // recording length T + t0
  double diam_omega = 0.0;
  double dist_gamma_d = 0.0;
  double h0 = 1.0;            // 1 - c0_bound / c
};

// Measures sup |b'| over the probe grid (plus the closed-form bound where
// available) and checks it against the declared subsonic bound. Returns the
// measured speed; throws NotSubsonic / BoundExceeded otherwise.
double validate_subsonic(const Trajectory& traj, const PhysicsConfig& cfg);

// Builds the pairing matrix from six sensor positions and validates its
// determinant against a scale-aware threshold. `scale` defaults to the
// diameter of the point set.
SensorArray check_sensor_matrix(const std::array<Vec3, 6>& points, double scale = 0.0);

HorizonConstants horizon_constants(const DomainSpec& dom, const PhysicsConfig& cfg);

// Samples `n_candidates` six-tuples on the observation sphere (deterministic
// in `seed`) and returns the one maximizing |det X|.
SensorArray select_sensors(const DomainSpec& dom, int n_candidates, std::uint64_t seed);

// Largest distance from `center` over the probe grid on [0, T]; used to check
// containment of the trajectory in D.
double max_excursion(const Trajectory& traj, const Vec3& center, double T,
                     int probes = kSpeedProbes);

// Containment + subsonic validation for a full scene; throws on violation.
void validate_scene(const Trajectory& traj, const PhysicsConfig& cfg, const DomainSpec& dom);

}  // namespace retrace
