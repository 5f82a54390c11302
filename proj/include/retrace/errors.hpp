#pragma once

#include <stdexcept>
#include <string>

namespace retrace {

enum class errc {
  config_invalid,
  not_subsonic,
  bound_exceeded,
  trajectory_outside_domain,
  observation_too_short,
  singular_pairing,
  no_convergence,
  source_at_sensor,
  no_arrival,
  monotonicity_violation,
  negative_field,
  out_of_range,
  negative_range,
};

const char* errc_name(errc code);

// Exit-code buckets used by the CLI: 2 config, 3 physics preconditions,
// 4 pipeline failure.
int exit_category(errc code);

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

// Raised by the reconstruction driver so callers see which step on which
// sensor failed; wraps the underlying error code.
class pipeline_error : public error {
 public:
  pipeline_error(errc code, const std::string& step, int sensor_index, const std::string& msg)
      : error(code, "step '" + step + "', sensor " + std::to_string(sensor_index) + ": " + msg),
        step_(step),
        sensor_index_(sensor_index) {}
  const std::string& step() const noexcept { return step_; }
  int sensor_index() const noexcept { return sensor_index_; }

 private:
  std::string step_;
  int sensor_index_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) { throw error(code, msg); }

}  // namespace retrace
