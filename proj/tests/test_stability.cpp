#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "retrace/stability.hpp"

using namespace retrace;

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

ExperimentSetup reference_setup() {
  ExperimentSetup setup;
  setup.cfg = PhysicsConfig{1.0, kFourPi, 5.0, 0.5};
  setup.dom.d_radius = 1.0;
  setup.dom.omega_radius = 3.0;
  setup.sensors = check_sensor_matrix({Vec3(3, 0, 0), Vec3(-3, 0, 0), Vec3(0, 3, 0),
                                       Vec3(0, -3, 0), Vec3(0, 0, 3), Vec3(0, 0, -3)});
  setup.dt = 1e-3;
  for (int k = 0; k < 18; ++k) setup.tau_grid.push_back(0.5 + 4.0 * k / 17.0);
  return setup;
}

Trajectory base_trajectory() {
  return Trajectory::linear(Vec3(-0.6, 0.1, 0.0), Vec3(0.24, 0.0, 0.05));
}

}  // namespace

TEST_CASE("closed-form constants for the reference geometry") {
  const ExperimentSetup setup = reference_setup();
  const HorizonConstants hc = horizon_constants(setup.dom, setup.cfg);
  const StabilityConstants sc = theoretical_bounds(hc, setup.cfg, setup.sensors);

  // 8 pi * 9 * 6 / (4 pi) = 108
  CHECK(sc.c_t == doctest::Approx(108.0).epsilon(1e-12));
  CHECK(hc.h0 == doctest::Approx(0.5).epsilon(1e-14));
  // exp(c T_obs / (dist h0)) = exp(9 / (2 * 0.5)) = e^9
  CHECK(sc.c_r_exp_factor == doctest::Approx(std::exp(9.0)).epsilon(1e-12));
  CHECK(sc.c_r_prefactor_arrival == doctest::Approx(216.0).epsilon(1e-12));
  // 8 pi c T_obs^2 / lambda = 2 * 81 = 162
  CHECK(sc.c_r_prefactor_drive == doctest::Approx(162.0).epsilon(1e-12));
  CHECK(sc.c_r_envelope ==
        doctest::Approx(2.0 * 216.0 + (216.0 + 162.0) * std::exp(9.0)).epsilon(1e-12));
  // ||X^{-1}||_inf for diag(-6,-6,-6) is 1/6
  CHECK(sc.norm_x_inv_inf == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(sc.c_b_scale == doctest::Approx(9.0 / 6.0).epsilon(1e-12));
  CHECK(sc.c_b_envelope == doctest::Approx(2.0 * sc.c_b_scale * sc.c_r_envelope).epsilon(1e-12));

  SUBCASE("constants grow with the observation window") {
    PhysicsConfig longer = setup.cfg;
    longer.T = 7.0;
    const HorizonConstants hc2 = horizon_constants(setup.dom, longer);
    const StabilityConstants sc2 = theoretical_bounds(hc2, longer, setup.sensors);
    CHECK(sc2.c_t > sc.c_t);
    CHECK(sc2.c_r_envelope > sc.c_r_envelope);
    CHECK(sc2.c_b_envelope > sc.c_b_envelope);
  }
}

TEST_CASE("pair experiment") {
  const ExperimentSetup setup = reference_setup();
  const Trajectory base = base_trajectory();

  SUBCASE("identical trajectories produce zero deltas") {
    const PerturbationResult res = pair_experiment(base, base, setup);
    CHECK(res.delta_phi_sup == 0.0);
    for (int i = 0; i < 6; ++i) {
      CHECK(res.delta_t[i] == 0.0);
      CHECK(res.delta_r_sup[i] == 0.0);
    }
    CHECK(res.delta_b_sup == 0.0);
    CHECK(res.arrival_bound_pass);
  }
  SUBCASE("translated pair satisfies the arrival-time bound and is linear in epsilon") {
    const Vec3 dir(1, 0, 0);
    const PerturbationResult coarse = pair_experiment(base, base.translated(1e-2 * dir), setup);
    const PerturbationResult fine = pair_experiment(base, base.translated(1e-3 * dir), setup);

    CHECK(coarse.delta_phi_sup > 0.0);
    CHECK(coarse.arrival_bound_pass);
    CHECK(fine.arrival_bound_pass);
    CHECK(std::isfinite(fine.ratio_b));
    CHECK(fine.ratio_b > 0.0);

    // position deltas track the translation size
    CHECK(coarse.delta_b_sup == doctest::Approx(1e-2).epsilon(0.05));
    CHECK(fine.delta_b_sup == doctest::Approx(1e-3).epsilon(0.05));
    const double ratio_of_ratios = coarse.delta_b_sup / (10.0 * fine.delta_b_sup);
    CHECK(ratio_of_ratios > 1.0 / 3.0);
    CHECK(ratio_of_ratios < 3.0);

    // and stay below the envelope by construction
    const HorizonConstants hc = horizon_constants(setup.dom, setup.cfg);
    const StabilityConstants sc = theoretical_bounds(hc, setup.cfg, setup.sensors);
    CHECK(fine.delta_b_sup <= sc.c_b_envelope * 2.0 * fine.delta_phi_sup);
    for (int i = 0; i < 6; ++i)
      CHECK(fine.delta_r_sup[i] <= sc.c_r_envelope * fine.delta_phi_sup);
  }
  SUBCASE("deltas are invariant under joint intensity/field rescaling") {
    ExperimentSetup scaled = setup;
    scaled.cfg.lambda *= 7.5;
    const Trajectory tilde = base.translated(Vec3(1e-3, 0, 0));
    const PerturbationResult a = pair_experiment(base, tilde, setup);
    const PerturbationResult b = pair_experiment(base, tilde, scaled);
    CHECK(b.delta_phi_sup == doctest::Approx(7.5 * a.delta_phi_sup).epsilon(1e-12));
    CHECK(b.delta_b_sup == doctest::Approx(a.delta_b_sup).epsilon(1e-9));
    for (int i = 0; i < 6; ++i)
      CHECK(b.delta_t[i] == doctest::Approx(a.delta_t[i]).epsilon(1e-9));
  }
}

TEST_CASE("noise sweep") {
  ExperimentSetup setup = reference_setup();
  setup.tau_grid.clear();
  for (int k = 0; k < 9; ++k) setup.tau_grid.push_back(0.5 + 4.0 * k / 8.0);
  const Trajectory base = base_trajectory();

  SUBCASE("zero noise reproduces the round-trip error") {
    const NoiseSweep sweep = noise_sweep(base, setup, {0.0}, 1, 11);
    REQUIRE(sweep.runs.size() == 1);
    CHECK(sweep.runs[0].status == "ok");
    CHECK(sweep.runs[0].delta_phi_sup == 0.0);

    const auto clean = synthesize_traces(base, setup.sensors, setup.cfg, setup.dom, setup.dt,
                                         0.0, 11);
    const auto report = reconstruct_trajectory(clean, setup.sensors, setup.cfg, setup.dom,
                                               setup.tau_grid, setup.recon, &base);
    CHECK(sweep.runs[0].delta_b_sup == doctest::Approx(*report.error_sup).epsilon(1e-12));
  }
  SUBCASE("tables are reproducible and noise hurts monotonically in the median") {
    const std::vector<double> sigmas = {1e-2, 1e-3, 1e-4};
    const NoiseSweep a = noise_sweep(base, setup, sigmas, 5, 1);
    const NoiseSweep b = noise_sweep(base, setup, sigmas, 5, 1);
    REQUIRE(a.runs.size() == b.runs.size());
    for (std::size_t k = 0; k < a.runs.size(); ++k) {
      CHECK(a.runs[k].delta_b_sup == b.runs[k].delta_b_sup);
      CHECK(a.runs[k].delta_phi_sup == b.runs[k].delta_phi_sup);
      CHECK(a.runs[k].status == b.runs[k].status);
    }
    REQUIRE(a.stats.size() == 3);
    // medians over five seeds, sigma decreasing: reconstruction should not get worse
    CHECK(a.stats[1].median_delta_b <= a.stats[0].median_delta_b + 1e-12);
    CHECK(a.stats[2].median_delta_b <= a.stats[1].median_delta_b + 1e-12);
    for (const auto& s : a.stats) CHECK(s.ok_runs == 5);
  }
}
