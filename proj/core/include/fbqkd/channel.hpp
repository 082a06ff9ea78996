#pragma once

#include <cstdint>
#include <vector>

#include "fbqkd/rng.hpp"

namespace fbqkd::channel {

inline constexpr double kSpeedOfLightCmPerS = 2.99792458e10;

struct FiberSpool {
  double length_km = 0.0;
  double loss_db_per_km = 0.19;
  double excess_loss_db = 0.0;
  double group_index = 1.468;
  double thermo_optic_per_c = 1.1e-5;
  double expansion_per_c = 5e-7;

  friend bool operator==(const FiberSpool&, const FiberSpool&) = default;
};

void validate(const FiberSpool& spool);

double spool_loss_db(const FiberSpool& spool);
double spool_transmission(const FiberSpool& spool);

/// Change of effective optical path, in cm, for a temperature change of delta_t_c.
double optical_path_shift_cm(const FiberSpool& spool, double delta_t_c);

/// theta = 2 pi dnu dL / c.
double phase_from_path(double delta_l_cm, double bin_spacing_hz);

/// Predicted drift in deg per km per degree C.
double phase_drift_slope(const FiberSpool& spool, double bin_spacing_hz);

double time_of_flight_s(const FiberSpool& spool, int passes);

/// Room temperature as a mean-reverting (Ornstein-Uhlenbeck) process, seen by the fibre
/// through a first-order thermal lag, plus an optional linear ramp.
struct TemperatureConfig {
  double initial_c = 22.0;
  double step_rms_per_600s_c = 0.03;  // stationary mean |T(t+600 s) - T(t)|
  double correlation_time_s = 1800.0;
  /// Thermal time constant of the spool: the fibre follows the room temperature through
  /// a first-order lag, so theta is smooth on the lock cadence. 0 means no lag.
  double spool_time_constant_s = 120.0;
  double ramp_c_per_600s = 0.0;

  friend bool operator==(const TemperatureConfig&, const TemperatureConfig&) = default;
};

void validate(const TemperatureConfig& cfg);

class TemperatureProcess {
 public:
  TemperatureProcess(const TemperatureConfig& cfg, std::uint64_t seed);

  /// Advances by dt seconds and returns the increment.
  double step(double dt_s);

  double temperature() const { return mean_ + spool_ + ramp_; }
  double elapsed_s() const { return elapsed_; }

  /// Stationary standard deviation of the room OU process, chosen so that the spool
  /// temperature has the configured mean |T(t+600 s) - T(t)|.
  static double stationary_sd(const TemperatureConfig& cfg);

 private:
  TemperatureConfig cfg_;
  Rng rng_;
  double mean_;
  double room_ = 0.0;   // OU fluctuation of the room
  double spool_ = 0.0;  // lagged copy seen by the fibre
  double ramp_ = 0.0;
  double elapsed_ = 0.0;
  double sd_;
};

/// Temperature sampled at t = 0, dt, 2dt, ... up to duration (inclusive of t = 0).
std::vector<double> temperature_trace(const TemperatureConfig& cfg, double duration_s,
                                      double dt_s, std::uint64_t seed);

}  // namespace fbqkd::channel
