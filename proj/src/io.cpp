#include "retrace/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace retrace {

namespace {

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3)
    raise(errc::config_invalid, "expected a 3-element array for a position/vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

double require_number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    raise(errc::config_invalid, std::string("missing or non-numeric field '") + key + "'");
  return j[key].get<double>();
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::config_invalid, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) raise(errc::config_invalid, "failed writing '" + path + "'");
}

// ---- JSON forms -------------------------------------------------------------

json to_json(const PhysicsConfig& cfg) {
  return json{{"c", cfg.c}, {"lambda", cfg.lambda}, {"T", cfg.T}, {"c0_bound", cfg.c0_bound}};
}

PhysicsConfig physics_from_json(const json& j) {
  PhysicsConfig cfg;
  cfg.c = require_number(j, "c");
  cfg.lambda = require_number(j, "lambda");
  cfg.T = require_number(j, "T");
  cfg.c0_bound = require_number(j, "c0_bound");
  cfg.validate();
  return cfg;
}

json to_json(const DomainSpec& dom) {
  return json{{"d_center", vec3_to_json(dom.d_center)},
              {"d_radius", dom.d_radius},
              {"omega_center", vec3_to_json(dom.omega_center)},
              {"omega_radius", dom.omega_radius}};
}

DomainSpec domain_from_json(const json& j) {
  DomainSpec dom;
  if (j.contains("d_center")) dom.d_center = vec3_from_json(j.at("d_center"));
  dom.d_radius = require_number(j, "d_radius");
  if (j.contains("omega_center")) dom.omega_center = vec3_from_json(j.at("omega_center"));
  dom.omega_radius = require_number(j, "omega_radius");
  dom.validate();
  return dom;
}

json to_json(const Trajectory& traj) {
  json j;
  j["kind"] = trajectory_kind_name(traj.kind());
  switch (traj.kind()) {
    case TrajectoryKind::stationary:
      j["position"] = vec3_to_json(traj.coefficients()[0]);
      break;
    case TrajectoryKind::linear:
      j["origin"] = vec3_to_json(traj.coefficients()[0]);
      j["velocity"] = vec3_to_json(traj.coefficients()[1]);
      break;
    case TrajectoryKind::circular:
    case TrajectoryKind::helical:
      j["center"] = vec3_to_json(traj.center());
      j["radius"] = traj.radius();
      j["omega"] = traj.omega();
      j["phase"] = traj.phase();
      if (traj.kind() == TrajectoryKind::helical) j["axial_velocity"] = traj.axial_velocity();
      break;
    case TrajectoryKind::polynomial: {
      json coeffs = json::array();
      for (const auto& c : traj.coefficients()) coeffs.push_back(vec3_to_json(c));
      j["coefficients"] = coeffs;
      break;
    }
    case TrajectoryKind::sampled: {
      j["times"] = traj.sample_times();
      json pos = json::array();
      for (const auto& p : traj.sample_positions()) pos.push_back(vec3_to_json(p));
      j["positions"] = pos;
      break;
    }
  }
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  if (!j.contains("kind") || !j["kind"].is_string())
    raise(errc::config_invalid, "trajectory needs a string 'kind'");
  switch (trajectory_kind_from_name(j["kind"].get<std::string>())) {
    case TrajectoryKind::stationary:
      return Trajectory::stationary(vec3_from_json(j.at("position")));
    case TrajectoryKind::linear:
      return Trajectory::linear(vec3_from_json(j.at("origin")), vec3_from_json(j.at("velocity")));
    case TrajectoryKind::circular:
      return Trajectory::circular(vec3_from_json(j.at("center")), require_number(j, "radius"),
                                  require_number(j, "omega"),
                                  j.value("phase", 0.0));
    case TrajectoryKind::helical:
      return Trajectory::helical(vec3_from_json(j.at("center")), require_number(j, "radius"),
                                 require_number(j, "omega"), require_number(j, "axial_velocity"),
                                 j.value("phase", 0.0));
    case TrajectoryKind::polynomial: {
      std::vector<Vec3> coeffs;
      for (const auto& c : j.at("coefficients")) coeffs.push_back(vec3_from_json(c));
      return Trajectory::polynomial(std::move(coeffs));
    }
    case TrajectoryKind::sampled: {
      std::vector<double> times = j.at("times").get<std::vector<double>>();
      std::vector<Vec3> pos;
      for (const auto& p : j.at("positions")) pos.push_back(vec3_from_json(p));
      return Trajectory::sampled(std::move(times), std::move(pos));
    }
  }
  raise(errc::config_invalid, "unreachable trajectory kind");
}

json to_json(const SensorArray& sensors) {
  json pts = json::array();
  for (const auto& p : sensors.points) pts.push_back(vec3_to_json(p));
  return json{{"points", pts}, {"det_x", sensors.det_x}, {"cond_x", sensors.cond_x}};
}

SensorArray sensors_from_json(const json& j, double scale) {
  if (!j.contains("points") || !j["points"].is_array() || j["points"].size() != 6)
    raise(errc::config_invalid, "sensors need exactly six 'points'");
  std::array<Vec3, 6> pts;
  for (int i = 0; i < 6; ++i) pts[i] = vec3_from_json(j["points"][i]);
  return check_sensor_matrix(pts, scale);
}

// ---- trace files ------------------------------------------------------------

void write_traces_csv(const std::string& path, const std::array<FieldTrace, 6>& traces) {
  for (int i = 0; i < 6; ++i)
    if (traces[i].values.size() != traces[0].values.size())
      raise(errc::config_invalid, "traces must share one grid to be written together");
  std::string out = "t,phi1,phi2,phi3,phi4,phi5,phi6\n";
  out.reserve(out.size() + traces[0].values.size() * 150);
  for (std::size_t k = 0; k < traces[0].values.size(); ++k) {
    out += format_g17(traces[0].time(k));
    for (int i = 0; i < 6; ++i) {
      out += ',';
      out += format_g17(traces[i].values[k]);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

void write_trace_meta(const std::string& path, const PhysicsConfig& cfg, const DomainSpec& dom,
                      const SensorArray& sensors, double dt, double noise_sigma,
                      std::uint64_t seed) {
  json j{{"physics", to_json(cfg)},
         {"domain", to_json(dom)},
         {"sensors", to_json(sensors)},
         {"dt", dt},
         {"noise_sigma", noise_sigma},
         {"seed", seed}};
  write_text_file(path, j.dump(2) + "\n");
}

TraceBundle load_traces(const std::string& csv_path, const std::string& meta_path) {
  std::ifstream meta_in(meta_path);
  if (!meta_in) raise(errc::config_invalid, "cannot open metadata '" + meta_path + "'");
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::exception& e) {
    raise(errc::config_invalid, "malformed metadata JSON: " + std::string(e.what()));
  }

  TraceBundle bundle;
  bundle.cfg = physics_from_json(meta.at("physics"));
  bundle.dom = domain_from_json(meta.at("domain"));
  bundle.sensors = sensors_from_json(meta.at("sensors"), bundle.dom.diam_omega());
  const double dt = require_number(meta, "dt");
  const double sigma = require_number(meta, "noise_sigma");
  const std::uint64_t seed = meta.value("seed", 0ull);

  std::ifstream in(csv_path);
  if (!in) raise(errc::config_invalid, "cannot open traces '" + csv_path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,phi1", 0) != 0)
    raise(errc::config_invalid, "trace CSV missing the t,phi1..phi6 header");

  std::array<std::vector<double>, 6> cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    double vals[7];
    for (int c = 0; c < 7; ++c) {
      if (!std::getline(row, cell, ','))
        raise(errc::config_invalid, "trace CSV row with fewer than 7 columns");
      vals[c] = std::strtod(cell.c_str(), nullptr);
    }
    for (int i = 0; i < 6; ++i) cols[i].push_back(vals[i + 1]);
  }
  if (cols[0].size() < 2) raise(errc::config_invalid, "trace CSV has fewer than 2 rows");

  for (int i = 0; i < 6; ++i) {
    bundle.traces[i].sensor_index = i + 1;
    bundle.traces[i].dt = dt;
    bundle.traces[i].noise_sigma = sigma;
    bundle.traces[i].seed = seed;
    bundle.traces[i].values = std::move(cols[i]);
  }
  return bundle;
}

// ---- reconstruction output --------------------------------------------------

void write_report_json(const std::string& path, const ReconstructionReport& report) {
  json j;
  j["b0_hat"] = vec3_to_json(report.b0_hat);
  j["arrivals_refined"] = report.arrivals_refined;
  json arrivals = json::array();
  for (int i = 0; i < 6; ++i)
    arrivals.push_back(json{{"sensor", i + 1},
                            {"t_x", report.per_sensor_arrivals[i].t_x},
                            {"detection_margin", report.per_sensor_arrivals[i].detection_margin}});
  j["arrivals"] = arrivals;
  j["tau"] = report.tau_grid;
  json bh = json::array();
  for (const auto& b : report.b_hat) bh.push_back(vec3_to_json(b));
  j["b_hat"] = bh;
  j["dropped_taus"] = report.dropped_taus;
  json diags = json::array();
  for (const auto& d : report.diagnostics)
    diags.push_back(json{{"tau", d.tau},
                         {"range_residual", d.range_residual},
                         {"solve_residual", d.solve_residual}});
  j["diagnostics"] = diags;
  if (report.error_sup) j["error_sup"] = *report.error_sup;
  write_text_file(path, j.dump(2) + "\n");
}

void write_trajectory_csv(const std::string& path, const ReconstructionReport& report,
                          const Trajectory* ground_truth) {
  std::string out = ground_truth ? "tau,bx,by,bz,err\n" : "tau,bx,by,bz\n";
  for (std::size_t k = 0; k < report.tau_grid.size(); ++k) {
    out += format_g17(report.tau_grid[k]);
    for (int c = 0; c < 3; ++c) {
      out += ',';
      out += format_g17(report.b_hat[k][c]);
    }
    if (ground_truth) {
      out += ',';
      out += format_g17((report.b_hat[k] - ground_truth->position(report.tau_grid[k])).norm());
    }
    out += '\n';
  }
  write_text_file(path, out);
}

// ---- stability output -------------------------------------------------------

void write_noise_csv(const std::string& path, const NoiseSweep& sweep) {
  std::string out = "sigma,seed,delta_phi_sup,delta_t_max,delta_r_max,delta_b_sup,status\n";
  for (const auto& run : sweep.runs) {
    out += format_g17(run.sigma);
    out += ',' + std::to_string(run.seed);
    out += ',' + format_g17(run.delta_phi_sup);
    out += ',' + format_g17(run.delta_t_max);
    out += ',' + format_g17(run.delta_r_max);
    out += ',' + format_g17(run.delta_b_sup);
    out += ',' + run.status + '\n';
  }
  write_text_file(path, out);
}

void write_pairs_csv(const std::string& path,
                     const std::vector<std::pair<double, PerturbationResult>>& pairs) {
  std::string out =
      "epsilon,delta_phi_sup,delta_t_max,delta_r_max,delta_b_sup,ratio_b,arrival_bound_pass\n";
  for (const auto& [eps, res] : pairs) {
    const double dt_max = *std::max_element(res.delta_t.begin(), res.delta_t.end());
    const double dr_max = *std::max_element(res.delta_r_sup.begin(), res.delta_r_sup.end());
    out += format_g17(eps);
    out += ',' + format_g17(res.delta_phi_sup);
    out += ',' + format_g17(dt_max);
    out += ',' + format_g17(dr_max);
    out += ',' + format_g17(res.delta_b_sup);
    out += ',' + format_g17(res.ratio_b);
    out += ',' + std::string(res.arrival_bound_pass ? "pass" : "fail") + '\n';
  }
  write_text_file(path, out);
}

json stability_summary_json(const HorizonConstants& hc, const StabilityConstants& sc,
                            const std::vector<std::pair<double, PerturbationResult>>& pairs,
                            const NoiseSweep* sweep) {
  json j;
  j["horizon"] = json{{"T0", hc.t0},
                      {"T_obs", hc.t_obs},
                      {"diam_omega", hc.diam_omega},
                      {"dist_gamma_d", hc.dist_gamma_d},
                      {"h0", hc.h0}};
  j["constants"] = json{{"C_t", sc.c_t},
                        {"C_r_prefactor_arrival", sc.c_r_prefactor_arrival},
                        {"C_r_prefactor_drive", sc.c_r_prefactor_drive},
                        {"C_r_exp_factor", sc.c_r_exp_factor},
                        {"C_r_envelope", sc.c_r_envelope},
                        {"norm_X_inv_inf", sc.norm_x_inv_inf},
                        {"C_b_scale", sc.c_b_scale},
                        {"C_b_envelope", sc.c_b_envelope}};
  json jp = json::array();
  for (const auto& [eps, res] : pairs)
    jp.push_back(json{{"epsilon", eps},
                      {"delta_phi_sup", res.delta_phi_sup},
                      {"delta_b_sup", res.delta_b_sup},
                      {"ratio_b", res.ratio_b},
                      {"arrival_bound_pass", res.arrival_bound_pass},
                      {"arrival_bound_margin", res.arrival_bound_margin}});
  j["pairs"] = jp;
  if (sweep) {
    json js = json::array();
    for (const auto& s : sweep->stats)
      js.push_back(json{{"sigma", s.sigma},
                        {"ok_runs", s.ok_runs},
                        {"failed_runs", s.failed_runs},
                        {"median_delta_b", s.median_delta_b},
                        {"max_delta_b", s.max_delta_b}});
    j["noise"] = js;
  }
  return j;
}

}  // namespace retrace
