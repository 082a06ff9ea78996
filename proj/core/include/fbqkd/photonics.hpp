#pragma once

#include <complex>
#include <vector>

namespace fbqkd::photonics {

struct SourceConfig {
  double brightness_hz_per_mw2 = 27e6;
  double pump_power_mw = 0.4;
  double saturation_power_mw = 0.17587;  // 0.7 MHz at 0.4 mW
  double car_target = 20.0;

  friend bool operator==(const SourceConfig&, const SourceConfig&) = default;
};

struct ModulatorConfig {
  double modulation_index = 1.4;
  double bin_spacing_hz = 15e9;
  double rf_phase_rad = 0.0;

  friend bool operator==(const ModulatorConfig&, const ModulatorConfig&) = default;
};

void validate(const SourceConfig& cfg);
void validate(const ModulatorConfig& cfg);

/// a P^2 / (1 + (P/P_sat)^2); an infinite saturation power gives the pure quadratic.
double pair_rate(const SourceConfig& cfg);

/// Saturation power for which pair_rate hits `target_rate_hz` at the configured pump.
double saturation_for_rate(double brightness_hz_per_mw2, double pump_power_mw,
                           double target_rate_hz);

struct Sideband {
  int order;
  std::complex<double> amplitude;
};

/// Orders -max_order..max_order with amplitude J_k(delta) e^{i k phi}.
std::vector<Sideband> eom_sidebands(const ModulatorConfig& cfg, int max_order);

/// Three-line fringe I0 (3 - 4 cos(phi - theta) + 2 cos(2 (phi - theta))).
double fringe_intensity(double theta, double phi, double i0);

/// Baseband power after the control comb passes a second modulator of index delta whose
/// RF phase is offset by x = phi - theta from the first. Uses exact Bessel weights, so
/// it matches fringe_intensity only approximately (up to scale) at delta ~ 1.4.
double exact_fringe_intensity(double theta, double phi, double delta, int max_order = 20);

/// Uncorrelated coincidences per second in a window of `window_s`.
double accidental_rate(double singles_a_hz, double singles_b_hz, double window_s);

}  // namespace fbqkd::photonics
