// retrace: simulate boundary recordings of a moving point source and
// reconstruct its trajectory from them.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "retrace/config.hpp"
#include "retrace/io.hpp"
#include "retrace/stability.hpp"

namespace fs = std::filesystem;
using namespace retrace;

namespace {

int env_threads() {
  const char* env = std::getenv("RETRACE_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON configuration file")->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--set", args.overrides, "override config entries, section.key=value");
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(errc::config_invalid, "cannot create output directory '" + dir + "'");
}

const Trajectory& require_trajectory(const RunConfig& config) {
  if (!config.trajectory)
    raise(errc::config_invalid, "config needs a 'trajectory' section for this command");
  return *config.trajectory;
}

const SensorArray& require_sensors(const RunConfig& config) {
  if (!config.sensors)
    raise(errc::config_invalid, "config needs a 'sensors' section for this command");
  if (config.sensors->cond_warning)
    std::cerr << "warning: sensor pairing matrix is poorly conditioned (cond = "
              << config.sensors->cond_x << "); expect amplified reconstruction error\n";
  return *config.sensors;
}

int run_simulate(const CommonArgs& args) {
  const RunConfig config = load_run_config(args.config_path, args.overrides);
  const Trajectory& traj = require_trajectory(config);
  const SensorArray& sensors = require_sensors(config);
  validate_scene(traj, config.physics, config.domain);
  ensure_out_dir(args.out_dir);

  const auto traces =
      synthesize_traces(traj, sensors, config.physics, config.domain, config.inversion.dt,
                        config.inversion.noise_sigma, config.inversion.seed, env_threads());
  write_traces_csv(args.out_dir + "/traces.csv", traces);
  write_trace_meta(args.out_dir + "/traces.meta.json", config.physics, config.domain, sensors,
                   traces[0].dt, config.inversion.noise_sigma, config.inversion.seed);
  std::cout << "wrote " << args.out_dir << "/traces.csv (" << traces[0].values.size()
            << " samples per sensor)\n";
  return 0;
}

int run_reconstruct(const CommonArgs& args, const std::string& traces_dir) {
  const RunConfig config = load_run_config(args.config_path, args.overrides);
  const std::string dir = traces_dir.empty() ? args.out_dir : traces_dir;
  const TraceBundle bundle = load_traces(dir + "/traces.csv", dir + "/traces.meta.json");
  ensure_out_dir(args.out_dir);

  const std::vector<double> tau_grid = make_tau_grid(config);
  const ReconstructOptions opts = make_reconstruct_options(config);
  const Trajectory* truth = config.trajectory ? &*config.trajectory : nullptr;

  const ReconstructionReport report = reconstruct_trajectory(
      bundle.traces, bundle.sensors, bundle.cfg, bundle.dom, tau_grid, opts, truth);

  write_report_json(args.out_dir + "/report.json", report);
  write_trajectory_csv(args.out_dir + "/trajectory.csv", report, truth);
  std::cout << "reconstructed " << report.tau_grid.size() << " of " << tau_grid.size()
            << " tau values";
  if (report.error_sup) std::cout << ", sup error " << format_g17(*report.error_sup);
  std::cout << "\n";
  return 0;
}

int run_constants(const CommonArgs& args) {
  const RunConfig config = load_run_config(args.config_path, args.overrides);
  const HorizonConstants hc = horizon_constants(config.domain, config.physics);
  json j{{"horizon",
          json{{"T0", hc.t0},
               {"T_obs", hc.t_obs},
               {"diam_omega", hc.diam_omega},
               {"dist_gamma_d", hc.dist_gamma_d},
               {"h0", hc.h0}}}};
  if (config.sensors) {
    const StabilityConstants sc = theoretical_bounds(hc, config.physics, *config.sensors);
    j["constants"] = stability_summary_json(hc, sc, {}, nullptr)["constants"];
  }
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  ensure_out_dir(args.out_dir);
  write_text_file(args.out_dir + "/constants.json", text);
  return 0;
}

int run_stability(const CommonArgs& args) {
  const RunConfig config = load_run_config(args.config_path, args.overrides);
  const Trajectory& traj = require_trajectory(config);
  ensure_out_dir(args.out_dir);

  ExperimentSetup setup;
  setup.sensors = require_sensors(config);
  setup.cfg = config.physics;
  setup.dom = config.domain;
  setup.dt = config.inversion.dt;
  setup.tau_grid = make_tau_grid(config);
  setup.recon = make_reconstruct_options(config);
  setup.threads = env_threads();

  const HorizonConstants hc = horizon_constants(config.domain, config.physics);
  const StabilityConstants sc = theoretical_bounds(hc, config.physics, setup.sensors);

  std::vector<std::pair<double, PerturbationResult>> pairs;
  for (const double eps : config.stability.epsilons) {
    const Trajectory tilde = traj.translated(eps * config.stability.direction);
    pairs.emplace_back(eps, pair_experiment(traj, tilde, setup));
  }
  write_pairs_csv(args.out_dir + "/stability_pairs.csv", pairs);

  NoiseSweep sweep;
  const bool have_noise = !config.stability.sigmas.empty();
  if (have_noise) {
    sweep = noise_sweep(traj, setup, config.stability.sigmas, config.stability.seeds_per_sigma,
                        config.stability.seed);
    write_noise_csv(args.out_dir + "/stability_noise.csv", sweep);
  }

  const json summary = stability_summary_json(hc, sc, pairs, have_noise ? &sweep : nullptr);
  write_text_file(args.out_dir + "/stability_summary.json", summary.dump(2) + "\n");
  std::cout << "stability experiments written to " << args.out_dir << "\n";
  return 0;
}

int dispatch(const std::string& name, const CommonArgs& args, const std::string& traces_dir) {
  if (name == "simulate") return run_simulate(args);
  if (name == "reconstruct") return run_reconstruct(args, traces_dir);
  if (name == "constants") return run_constants(args);
  if (name == "stability") return run_stability(args);
  if (name == "roundtrip") {
    const int rc = run_simulate(args);
    if (rc != 0) return rc;
    return run_reconstruct(args, args.out_dir);
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moving point-source wave simulation and trajectory reconstruction"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string traces_dir;

  CLI::App* sim = app.add_subcommand("simulate", "synthesize sensor traces");
  add_common(sim, args);
  CLI::App* rec = app.add_subcommand("reconstruct", "reconstruct the trajectory from traces");
  add_common(rec, args);
  rec->add_option("--traces", traces_dir, "directory with traces.csv/meta (default: --out)");
  CLI::App* con = app.add_subcommand("constants", "print horizon and stability constants");
  add_common(con, args);
  CLI::App* sta = app.add_subcommand("stability", "run perturbation and noise experiments");
  add_common(sta, args);
  CLI::App* rt = app.add_subcommand("roundtrip", "simulate then reconstruct");
  add_common(rt, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return dispatch(app.get_subcommands().front()->get_name(), args, traces_dir);
  } catch (const pipeline_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_category(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
