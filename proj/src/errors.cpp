#include "retrace/errors.hpp"

namespace retrace {

const char* errc_name(errc code) {
  switch (code) {
    case errc::config_invalid: return "ConfigInvalid";
    case errc::not_subsonic: return "NotSubsonic";
    case errc::bound_exceeded: return "BoundExceeded";
    case errc::trajectory_outside_domain: return "TrajectoryOutsideDomain";
    case errc::observation_too_short: return "ObservationTooShort";
    case errc::singular_pairing: return "SingularPairing";
    case errc::no_convergence: return "NoConvergence";
    case errc::source_at_sensor: return "SourceAtSensor";
    case errc::no_arrival: return "NoArrival";
    case errc::monotonicity_violation: return "MonotonicityViolation";
    case errc::negative_field: return "NegativeField";
    case errc::out_of_range: return "OutOfRange";
    case errc::negative_range: return "NegativeRange";
  }
  return "UnknownError";
}

int exit_category(errc code) {
  switch (code) {
    case errc::config_invalid:
      return 2;
    case errc::not_subsonic:
    case errc::bound_exceeded:
    case errc::trajectory_outside_domain:
    case errc::observation_too_short:
    case errc::singular_pairing:
      return 3;
    default:
      return 4;
  }
}

}  // namespace retrace
