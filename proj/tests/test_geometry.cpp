#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "retrace/geometry.hpp"

using namespace retrace;

namespace {

std::array<Vec3, 6> axis_sensors(double radius) {
  return {Vec3(radius, 0, 0),  Vec3(-radius, 0, 0), Vec3(0, radius, 0),
          Vec3(0, -radius, 0), Vec3(0, 0, radius),  Vec3(0, 0, -radius)};
}

}  // namespace

TEST_CASE("subsonic validation measures the top speed") {
  PhysicsConfig cfg{1.0, 1.0, 5.0, 0.5};

  SUBCASE("constant-velocity source") {
    const auto traj = Trajectory::linear(Vec3::Zero(), Vec3(0.5, 0, 0));
    CHECK(validate_subsonic(traj, cfg) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("stationary source") {
    const auto traj = Trajectory::stationary(Vec3::Zero());
    CHECK(validate_subsonic(traj, cfg) == 0.0);
  }
  SUBCASE("supersonic source is rejected") {
    const auto traj = Trajectory::linear(Vec3::Zero(), Vec3(2.0, 0, 0));
    CHECK_THROWS_AS(validate_subsonic(traj, cfg), error);
    try {
      validate_subsonic(traj, cfg);
    } catch (const error& e) {
      CHECK(e.code() == errc::not_subsonic);
    }
  }
  SUBCASE("speed above the declared bound but below c") {
    cfg.c0_bound = 0.4;
    const auto traj = Trajectory::linear(Vec3::Zero(), Vec3(0.5, 0, 0));
    try {
      validate_subsonic(traj, cfg);
      FAIL("expected BoundExceeded");
    } catch (const error& e) {
      CHECK(e.code() == errc::bound_exceeded);
    }
  }
  SUBCASE("helical closed-form bound") {
    const auto traj = Trajectory::helical(Vec3(0, 0, -0.5), 0.5, 1.0, 0.2);
    cfg.c0_bound = 0.55;
    const double c0 = validate_subsonic(traj, cfg);
    CHECK(c0 == doctest::Approx(std::hypot(0.5, 0.2 / 1.0) * 1.0).epsilon(1e-9));
    CHECK(c0 == doctest::Approx(std::sqrt(0.29)).epsilon(1e-12));
  }
}

TEST_CASE("pairing matrix from the axis array") {
  auto pts = axis_sensors(3.0);
  const SensorArray arr = check_sensor_matrix(pts);
  CHECK(arr.det_x == doctest::Approx(-216.0).epsilon(1e-14));
  CHECK(arr.pairing_matrix(0, 0) == doctest::Approx(-6.0));
  CHECK(arr.pairing_matrix(1, 1) == doctest::Approx(-6.0));
  CHECK(arr.pairing_matrix(2, 2) == doctest::Approx(-6.0));
  CHECK(arr.pairing_matrix(0, 1) == 0.0);
  CHECK(arr.cond_x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(arr.cond_warning);

  SUBCASE("swapping the first pair flips the determinant sign") {
    std::swap(pts[0], pts[1]);
    const SensorArray swapped = check_sensor_matrix(pts);
    CHECK(swapped.det_x == doctest::Approx(216.0).epsilon(1e-14));
  }
  SUBCASE("two equal difference rows are singular") {
    pts = axis_sensors(3.0);
    pts[2] = Vec3(1, 2, 2);
    pts[3] = pts[2] + (pts[1] - pts[0]);
    try {
      check_sensor_matrix(pts);
      FAIL("expected SingularPairing");
    } catch (const error& e) {
      CHECK(e.code() == errc::singular_pairing);
    }
  }
  SUBCASE("a zero difference row is singular") {
    pts = axis_sensors(3.0);
    pts[1] = pts[0];
    CHECK_THROWS_AS(check_sensor_matrix(pts), error);
  }
}

TEST_CASE("horizon constants for concentric balls") {
  DomainSpec dom;
  dom.d_radius = 1.0;
  dom.omega_radius = 3.0;
  PhysicsConfig cfg{1.0, 1.0, 5.0, 0.5};

  const HorizonConstants hc = horizon_constants(dom, cfg);
  CHECK(hc.t0 == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(hc.t_obs == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(hc.diam_omega == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(hc.dist_gamma_d == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(hc.h0 == doctest::Approx(0.5).epsilon(1e-14));

  SUBCASE("travel bound scales as 1/c") {
    cfg.c = 2.0;
    CHECK(horizon_constants(dom, cfg).t0 == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("too-short horizon is rejected") {
    cfg.T = 3.0;
    try {
      horizon_constants(dom, cfg);
      FAIL("expected ObservationTooShort");
    } catch (const error& e) {
      CHECK(e.code() == errc::observation_too_short);
    }
  }
  SUBCASE("joint rescaling of lengths and speed leaves T0 fixed") {
    const double s = 2.5;
    DomainSpec scaled = dom;
    scaled.d_radius *= s;
    scaled.omega_radius *= s;
    scaled.d_center *= s;
    scaled.omega_center *= s;
    PhysicsConfig fast = cfg;
    fast.c *= s;
    CHECK(horizon_constants(scaled, fast).t0 == doctest::Approx(hc.t0).epsilon(1e-14));
  }
  SUBCASE("off-center source ball") {
    dom.d_center = Vec3(0.5, 0, 0);
    const HorizonConstants off = horizon_constants(dom, cfg);
    CHECK(off.t0 == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(off.dist_gamma_d == doctest::Approx(1.5).epsilon(1e-14));
  }
}

TEST_CASE("sensor selection is deterministic and non-degenerate") {
  DomainSpec dom;
  dom.d_radius = 1.0;
  dom.omega_radius = 3.0;

  const SensorArray a = select_sensors(dom, 1000, 1);
  const SensorArray b = select_sensors(dom, 1000, 1);
  CHECK(std::abs(a.det_x) > 0.0);
  for (int i = 0; i < 6; ++i) CHECK((a.points[i] - b.points[i]).norm() == 0.0);
  for (int i = 0; i < 6; ++i)
    CHECK((a.points[i] - dom.omega_center).norm() == doctest::Approx(3.0).epsilon(1e-12));

  SUBCASE("different seed, different array") {
    const SensorArray c = select_sensors(dom, 1000, 2);
    CHECK((a.points[0] - c.points[0]).norm() > 0.0);
  }
  SUBCASE("single candidate is returned as-is") {
    const SensorArray c1 = select_sensors(dom, 1, 7);
    const SensorArray c2 = select_sensors(dom, 1, 7);
    CHECK((c1.points[3] - c2.points[3]).norm() == 0.0);
  }
  SUBCASE("a hundred candidates always give a usable array") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const SensorArray arr = select_sensors(dom, 100, seed);
      CHECK_NOTHROW(check_sensor_matrix(arr.points, dom.diam_omega()));
    }
  }
}

TEST_CASE("trajectory families evaluate positions and velocities") {
  SUBCASE("polynomial Horner evaluation") {
    // b(t) = (1,0,0) + (0,2,0) t + (0,0,3) t^2
    const auto traj =
        Trajectory::polynomial({Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(0, 0, 3)});
    const Vec3 p = traj.position(2.0);
    CHECK(p.x() == doctest::Approx(1.0));
    CHECK(p.y() == doctest::Approx(4.0));
    CHECK(p.z() == doctest::Approx(12.0));
    const Vec3 v = traj.velocity(2.0);
    CHECK(v.y() == doctest::Approx(2.0));
    CHECK(v.z() == doctest::Approx(12.0));
  }
  SUBCASE("circular stays on its circle") {
    const auto traj = Trajectory::circular(Vec3(1, 1, 0), 0.5, 2.0, 0.3);
    for (double t : {0.0, 0.7, 1.9}) {
      CHECK((traj.position(t) - Vec3(1, 1, 0)).norm() == doctest::Approx(0.5).epsilon(1e-12));
      // velocity is tangent
      CHECK(std::abs(traj.velocity(t).dot(traj.position(t) - Vec3(1, 1, 0))) < 1e-12);
    }
  }
  SUBCASE("sampled spline reproduces knots and stays close in between") {
    std::vector<double> ts;
    std::vector<Vec3> ps;
    for (int i = 0; i <= 50; ++i) {
      const double t = 5.0 * i / 50.0;
      ts.push_back(t);
      ps.push_back(Vec3(std::sin(t), std::cos(t), 0.1 * t));
    }
    const auto traj = Trajectory::sampled(ts, ps);
    for (std::size_t i = 0; i < ts.size(); ++i)
      CHECK((traj.position(ts[i]) - ps[i]).norm() < 1e-12);
    for (double t : {1.55, 2.31, 3.87}) {
      CHECK((traj.position(t) - Vec3(std::sin(t), std::cos(t), 0.1 * t)).norm() < 1e-4);
      CHECK((traj.velocity(t) - Vec3(std::cos(t), -std::sin(t), 0.1)).norm() < 1e-3);
    }
    // natural end conditions cost some accuracy in the first/last interval
    for (double t : {0.05, 4.97})
      CHECK((traj.position(t) - Vec3(std::sin(t), std::cos(t), 0.1 * t)).norm() < 5e-3);
  }
  SUBCASE("clamped continuation freezes the endpoints") {
    const auto traj = Trajectory::linear(Vec3::Zero(), Vec3(1, 0, 0));
    CHECK((traj.position_clamped(-1.0, 5.0) - Vec3(0, 0, 0)).norm() == 0.0);
    CHECK((traj.position_clamped(9.0, 5.0) - Vec3(5, 0, 0)).norm() == 0.0);
    CHECK(traj.velocity_clamped(-1.0, 5.0).norm() == 0.0);
    CHECK(traj.velocity_clamped(9.0, 5.0).norm() == 0.0);
    CHECK(traj.velocity_clamped(2.0, 5.0).norm() == doctest::Approx(1.0));
  }
  SUBCASE("translation moves every sample of the path") {
    const auto traj = Trajectory::helical(Vec3(0, 0, -0.5), 0.5, 1.0, 0.2);
    const auto moved = traj.translated(Vec3(1e-3, 0, 0));
    for (double t : {0.0, 1.3, 4.9})
      CHECK((moved.position(t) - traj.position(t) - Vec3(1e-3, 0, 0)).norm() < 1e-15);
  }
}

TEST_CASE("scene validation enforces containment") {
  DomainSpec dom;
  dom.d_radius = 1.0;
  dom.omega_radius = 3.0;
  PhysicsConfig cfg{1.0, 1.0, 5.0, 0.5};

  CHECK_NOTHROW(validate_scene(Trajectory::stationary(Vec3(0.2, 0, 0)), cfg, dom));
  try {
    validate_scene(Trajectory::stationary(Vec3(1.5, 0, 0)), cfg, dom);
    FAIL("expected TrajectoryOutsideDomain");
  } catch (const error& e) {
    CHECK(e.code() == errc::trajectory_outside_domain);
  }
}

TEST_CASE("configuration invariants are enforced") {
  PhysicsConfig bad{1.0, 1.0, 5.0, 1.0};  // c0_bound == c
  CHECK_THROWS_AS(bad.validate(), error);
  DomainSpec dom;
  dom.d_radius = 3.0;
  dom.omega_radius = 3.0;
  CHECK_THROWS_AS(dom.validate(), error);
}
