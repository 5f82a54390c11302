#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "retrace/inverse.hpp"
#include "retrace/stability.hpp"

namespace retrace {

using json = nlohmann::json;

// ---- JSON forms of the configuration types ---------------------------------

json to_json(const PhysicsConfig& cfg);
PhysicsConfig physics_from_json(const json& j);

json to_json(const DomainSpec& dom);
DomainSpec domain_from_json(const json& j);

json to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const json& j);

json to_json(const SensorArray& sensors);
SensorArray sensors_from_json(const json& j, double scale = 0.0);

// ---- trace files ------------------------------------------------------------

// Column layout: t,phi1,phi2,phi3,phi4,phi5,phi6 with 17 significant digits.
void write_traces_csv(const std::string& path, const std::array<FieldTrace, 6>& traces);

// Sidecar metadata carrying physics, domain, sensors, dt, noise_sigma, seed.
void write_trace_meta(const std::string& path, const PhysicsConfig& cfg, const DomainSpec& dom,
                      const SensorArray& sensors, double dt, double noise_sigma,
                      std::uint64_t seed);

struct TraceBundle {
  std::array<FieldTrace, 6> traces;
  PhysicsConfig cfg;
  DomainSpec dom;
  SensorArray sensors;
};

TraceBundle load_traces(const std::string& csv_path, const std::string& meta_path);

// ---- reconstruction output --------------------------------------------------

void write_report_json(const std::string& path, const ReconstructionReport& report);

// Columns tau,bx,by,bz and, when ground truth is known, a trailing err column.
void write_trajectory_csv(const std::string& path, const ReconstructionReport& report,
                          const Trajectory* ground_truth = nullptr);

// ---- stability output -------------------------------------------------------

void write_noise_csv(const std::string& path, const NoiseSweep& sweep);

void write_pairs_csv(const std::string& path,
                     const std::vector<std::pair<double, PerturbationResult>>& pairs);

json stability_summary_json(const HorizonConstants& hc, const StabilityConstants& sc,
                            const std::vector<std::pair<double, PerturbationResult>>& pairs,
                            const NoiseSweep* sweep);

// ---- helpers ----------------------------------------------------------------

std::string format_g17(double v);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace retrace
