#include "fbqkd/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fbqkd/error.hpp"

namespace fbqkd::channel {

void validate(const FiberSpool& s) {
  if (!(s.length_km >= 0.0)) throw InvalidArgument("spool length must be >= 0");
  if (!(s.loss_db_per_km >= 0.0) || !(s.excess_loss_db >= 0.0)) {
    throw InvalidArgument("spool losses must be >= 0");
  }
  if (!(s.group_index >= 1.3 && s.group_index <= 1.6)) {
    throw InvalidArgument("group index must lie in [1.3, 1.6]");
  }
  if (!std::isfinite(s.thermo_optic_per_c) || !std::isfinite(s.expansion_per_c)) {
    throw InvalidArgument("thermal coefficients must be finite");
  }
}

double spool_loss_db(const FiberSpool& s) { return s.loss_db_per_km * s.length_km + s.excess_loss_db; }

double spool_transmission(const FiberSpool& s) {
  validate(s);
  return std::pow(10.0, -spool_loss_db(s) / 10.0);
}

double optical_path_shift_cm(const FiberSpool& s, double delta_t_c) {
  validate(s);
  const double length_cm = s.length_km * 1e5;
  return (s.thermo_optic_per_c + s.group_index * s.expansion_per_c) * length_cm * delta_t_c;
}

double phase_from_path(double delta_l_cm, double bin_spacing_hz) {
  if (!(bin_spacing_hz > 0.0)) throw InvalidArgument("bin spacing must be > 0");
  return 2.0 * std::numbers::pi * bin_spacing_hz * delta_l_cm / kSpeedOfLightCmPerS;
}

double phase_drift_slope(const FiberSpool& s, double bin_spacing_hz) {
  if (bin_spacing_hz == 0.0) return 0.0;
  FiberSpool unit = s;
  unit.length_km = 1.0;
  const double rad = phase_from_path(optical_path_shift_cm(unit, 1.0), bin_spacing_hz);
  return rad * 180.0 / std::numbers::pi;
}

double time_of_flight_s(const FiberSpool& s, int passes) {
  if (passes < 1) throw InvalidArgument("passes must be >= 1");
  validate(s);
  return passes * s.group_index * s.length_km * 1e5 / kSpeedOfLightCmPerS;
}

void validate(const TemperatureConfig& cfg) {
  if (!std::isfinite(cfg.initial_c)) throw InvalidArgument("initial temperature must be finite");
  if (!(cfg.step_rms_per_600s_c >= 0.0)) throw InvalidArgument("step_rms_per_600s must be >= 0");
  if (!(cfg.correlation_time_s > 0.0)) throw InvalidArgument("correlation time must be > 0");
  if (!(cfg.spool_time_constant_s >= 0.0) || !std::isfinite(cfg.spool_time_constant_s)) {
    throw InvalidArgument("spool time constant must be finite and >= 0");
  }
  if (!std::isfinite(cfg.ramp_c_per_600s)) throw InvalidArgument("ramp must be finite");
}

namespace {

// Autocovariance of the lagged spool temperature for unit room variance:
// room OU with rate a, first-order lag with rate b.
double spool_autocov(double a, double b, double lag) {
  if (!std::isfinite(b)) return std::exp(-a * lag);
  if (std::abs(b - a) < 1e-9 * a) return 0.5 * (1.0 + a * lag) * std::exp(-a * lag);
  return b / (b * b - a * a) * (b * std::exp(-a * lag) - a * std::exp(-b * lag));
}

double lag_rate(const TemperatureConfig& cfg) {
  return cfg.spool_time_constant_s > 0.0 ? 1.0 / cfg.spool_time_constant_s
                                         : std::numeric_limits<double>::infinity();
}

}  // namespace

double TemperatureProcess::stationary_sd(const TemperatureConfig& cfg) {
  // T(t+h) - T(t) is Gaussian with variance 2 (R(0) - R(h)); its mean absolute value is
  // sqrt(2/pi) times the standard deviation. Match that to the 600 s statistic.
  const double a = 1.0 / cfg.correlation_time_s;
  const double b = lag_rate(cfg);
  const double unit_var = 2.0 * (spool_autocov(a, b, 0.0) - spool_autocov(a, b, 600.0));
  const double sd_600 = cfg.step_rms_per_600s_c / std::sqrt(2.0 / std::numbers::pi);
  return sd_600 / std::sqrt(unit_var);
}

TemperatureProcess::TemperatureProcess(const TemperatureConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(make_rng(seed, "channel.temperature")), mean_(cfg.initial_c) {
  validate(cfg);
  sd_ = stationary_sd(cfg);
  // Start from the joint stationary law so the statistic holds from t = 0.
  std::normal_distribution<double> n01;
  room_ = sd_ * n01(rng_);
  const double a = 1.0 / cfg.correlation_time_s;
  const double b = lag_rate(cfg);
  if (std::isfinite(b)) {
    spool_ = b / (a + b) * room_ + sd_ * std::sqrt(a * b) / (a + b) * n01(rng_);
  } else {
    spool_ = room_;
  }
  mean_ = cfg.initial_c - spool_;
}

double TemperatureProcess::step(double dt_s) {
  if (!(dt_s > 0.0)) throw InvalidArgument("temperature step needs dt > 0");
  const double before = temperature();
  const double a = std::exp(-dt_s / cfg_.correlation_time_s);
  std::normal_distribution<double> n01;
  const double z = n01(rng_);
  const double room_before = room_;
  room_ = room_ * a + sd_ * std::sqrt(1.0 - a * a) * z;
  if (cfg_.spool_time_constant_s > 0.0) {
    // trapezoidal input over the step keeps the lag accurate for dt << time constant
    const double k = 1.0 - std::exp(-dt_s / cfg_.spool_time_constant_s);
    spool_ += (0.5 * (room_before + room_) - spool_) * k;
  } else {
    spool_ = room_;
  }
  ramp_ += cfg_.ramp_c_per_600s * dt_s / 600.0;
  elapsed_ += dt_s;
  return temperature() - before;
}

std::vector<double> temperature_trace(const TemperatureConfig& cfg, double duration_s,
                                      double dt_s, std::uint64_t seed) {
  if (!(dt_s > 0.0)) throw InvalidArgument("dt must be > 0");
  TemperatureProcess proc(cfg, seed);
  const auto n = static_cast<std::size_t>(std::floor(duration_s / dt_s + 1e-9));
  std::vector<double> out;
  out.reserve(n + 1);
  out.push_back(proc.temperature());
  for (std::size_t i = 0; i < n; ++i) {
    proc.step(dt_s);
    out.push_back(proc.temperature());
  }
  return out;
}

}  // namespace fbqkd::channel
