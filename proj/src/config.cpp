#include "retrace/config.hpp"

#include <cmath>
#include <fstream>

#include "retrace/io.hpp"

namespace retrace {

namespace {

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    raise(errc::config_invalid, "override must look like section.key=value: '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) raise(errc::config_invalid, "empty key in override path '" + path + "'");
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) raise(errc::config_invalid, "cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    raise(errc::config_invalid, "malformed config JSON: " + std::string(e.what()));
  }
  for (const auto& ov : overrides) apply_override(doc, ov);

  RunConfig config;
  if (!doc.contains("physics"))
    raise(errc::config_invalid, "config needs a 'physics' section");
  if (!doc.contains("domain"))
    raise(errc::config_invalid, "config needs a 'domain' section");
  try {
    config.physics = physics_from_json(doc["physics"]);
    config.domain = domain_from_json(doc["domain"]);
    if (doc.contains("trajectory")) config.trajectory = trajectory_from_json(doc["trajectory"]);
    if (doc.contains("sensors")) {
      const json& js = doc["sensors"];
      if (js.contains("select")) {
        const json& sel = js["select"];
        config.sensors = select_sensors(config.domain, sel.value("n_candidates", 1000),
                                        sel.value("seed", 1ull));
      } else {
        config.sensors = sensors_from_json(js, config.domain.diam_omega());
        for (int i = 0; i < 6; ++i) {
          const double off = (config.sensors->points[i] - config.domain.omega_center).norm();
          if (std::abs(off - config.domain.omega_radius) > 1e-6 * config.domain.omega_radius)
            raise(errc::config_invalid,
                  "sensor " + std::to_string(i + 1) + " does not lie on the observation sphere");
        }
      }
    }
    if (doc.contains("inversion")) {
      const json& ji = doc["inversion"];
      auto& inv = config.inversion;
      inv.dt = ji.value("dt", inv.dt);
      inv.noise_sigma = ji.value("noise_sigma", inv.noise_sigma);
      inv.seed = ji.value("seed", inv.seed);
      if (ji.contains("tau_min")) inv.tau_min = ji["tau_min"].get<double>();
      if (ji.contains("tau_max")) inv.tau_max = ji["tau_max"].get<double>();
      inv.tau_count = ji.value("tau_count", inv.tau_count);
      inv.thresholds.abs_floor = ji.value("abs_floor", inv.thresholds.abs_floor);
      inv.thresholds.k_sigma = ji.value("k_sigma", inv.thresholds.k_sigma);
      inv.thresholds.hold = ji.value("hold", inv.thresholds.hold);
      inv.refine = ji.value("refine", inv.refine);
      inv.mono_tol = ji.value("mono_tol", inv.mono_tol);
      if (!(inv.dt > 0.0)) raise(errc::config_invalid, "inversion.dt must be positive");
      if (inv.noise_sigma < 0.0)
        raise(errc::config_invalid, "inversion.noise_sigma must be nonnegative");
      if (inv.tau_count < 1) raise(errc::config_invalid, "inversion.tau_count must be >= 1");
      if (inv.refine != "auto" && inv.refine != "on" && inv.refine != "off")
        raise(errc::config_invalid, "inversion.refine must be auto, on, or off");
    }
    if (doc.contains("stability")) {
      const json& js = doc["stability"];
      auto& st = config.stability;
      if (js.contains("epsilons")) st.epsilons = js["epsilons"].get<std::vector<double>>();
      if (js.contains("direction")) {
        const json& d = js["direction"];
        if (!d.is_array() || d.size() != 3)
          raise(errc::config_invalid, "stability.direction must be a 3-vector");
        st.direction = Vec3(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
        if (st.direction.norm() == 0.0)
          raise(errc::config_invalid, "stability.direction must be nonzero");
        st.direction.normalize();
      }
      if (js.contains("sigmas")) st.sigmas = js["sigmas"].get<std::vector<double>>();
      st.seeds_per_sigma = js.value("seeds_per_sigma", st.seeds_per_sigma);
      st.seed = js.value("seed", st.seed);
    }
  } catch (const json::exception& e) {
    raise(errc::config_invalid, "config field error: " + std::string(e.what()));
  }
  return config;
}

std::vector<double> make_tau_grid(const RunConfig& config) {
  const double lo = config.inversion.tau_min.value_or(0.05 * config.physics.T);
  const double hi = config.inversion.tau_max.value_or(0.95 * config.physics.T);
  const int n = config.inversion.tau_count;
  if (!(lo <= hi)) raise(errc::config_invalid, "tau_min must not exceed tau_max");
  std::vector<double> grid(static_cast<std::size_t>(n));
  if (n == 1) {
    grid[0] = 0.5 * (lo + hi);
  } else {
    for (int k = 0; k < n; ++k)
      grid[static_cast<std::size_t>(k)] = lo + (hi - lo) * static_cast<double>(k) / (n - 1);
  }
  return grid;
}

ReconstructOptions make_reconstruct_options(const RunConfig& config) {
  ReconstructOptions opts;
  opts.thresholds = config.inversion.thresholds;
  opts.mono_tol = config.inversion.mono_tol;
  if (config.inversion.refine == "on")
    opts.refine = ReconstructOptions::Refine::on;
  else if (config.inversion.refine == "off")
    opts.refine = ReconstructOptions::Refine::off;
  else
    opts.refine = ReconstructOptions::Refine::automatic;
  return opts;
}

}  // namespace retrace
