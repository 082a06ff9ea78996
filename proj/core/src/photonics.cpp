#include "fbqkd/photonics.hpp"

#include <cmath>
#include <limits>

#include "fbqkd/error.hpp"

namespace fbqkd::photonics {

namespace {

double bessel_j(int k, double x) {
  const int n = std::abs(k);
  double v = std::cyl_bessel_j(static_cast<double>(n), std::abs(x));
  // J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x).
  if (k < 0 && (n % 2)) v = -v;
  if (x < 0 && (n % 2)) v = -v;
  return v;
}

}  // namespace

void validate(const SourceConfig& cfg) {
  if (!(cfg.brightness_hz_per_mw2 > 0.0)) throw InvalidArgument("source brightness must be > 0");
  if (!(cfg.pump_power_mw > 0.0)) throw InvalidArgument("pump power must be > 0");
  if (!(cfg.saturation_power_mw > 0.0)) throw InvalidArgument("saturation power must be > 0");
  if (!(cfg.car_target > 0.0)) throw InvalidArgument("car_target must be > 0");
}

void validate(const ModulatorConfig& cfg) {
  if (!(cfg.modulation_index >= 0.0)) throw InvalidArgument("modulation index must be >= 0");
  if (!(cfg.bin_spacing_hz > 0.0)) throw InvalidArgument("bin spacing must be > 0");
  if (!std::isfinite(cfg.rf_phase_rad)) throw InvalidArgument("rf phase must be finite");
}

double pair_rate(const SourceConfig& cfg) {
  const double p = cfg.pump_power_mw;
  const double quad = cfg.brightness_hz_per_mw2 * p * p;
  if (std::isinf(cfg.saturation_power_mw)) return quad;
  const double r = p / cfg.saturation_power_mw;
  return quad / (1.0 + r * r);
}

double saturation_for_rate(double a, double p, double target) {
  const double quad = a * p * p;
  if (!(target > 0.0) || target > quad) {
    throw InvalidArgument("target pair rate must lie in (0, a P^2]");
  }
  if (target == quad) return std::numeric_limits<double>::infinity();
  return p / std::sqrt(quad / target - 1.0);
}

std::vector<Sideband> eom_sidebands(const ModulatorConfig& cfg, int max_order) {
  if (max_order < 0) throw InvalidArgument("max_order must be >= 0");
  std::vector<Sideband> out;
  out.reserve(static_cast<std::size_t>(2 * max_order + 1));
  for (int k = -max_order; k <= max_order; ++k) {
    out.push_back({k, bessel_j(k, cfg.modulation_index) *
                          std::polar(1.0, static_cast<double>(k) * cfg.rf_phase_rad)});
  }
  return out;
}

double fringe_intensity(double theta, double phi, double i0) {
  const double x = phi - theta;
  return i0 * (3.0 - 4.0 * std::cos(x) + 2.0 * std::cos(2.0 * x));
}

double exact_fringe_intensity(double theta, double phi, double delta, int max_order) {
  // Line k of the first comb carries J_k(delta) and picks up phase k*theta in the
  // spool; the second modulator maps line k back to baseband with J_{-k}(delta) and RF
  // phase -k*phi. Baseband amplitude: sum_k J_k J_{-k} e^{-ik(phi - theta)}.
  const double x = phi - theta;
  std::complex<double> a{0.0, 0.0};
  for (int k = -max_order; k <= max_order; ++k) {
    const double jk = bessel_j(k, delta);
    a += jk * bessel_j(-k, delta) * std::polar(1.0, -static_cast<double>(k) * x);
  }
  return std::norm(a);
}

double accidental_rate(double singles_a_hz, double singles_b_hz, double window_s) {
  if (singles_a_hz < 0.0 || singles_b_hz < 0.0 || window_s < 0.0) {
    throw InvalidArgument("accidental_rate inputs must be nonnegative");
  }
  return singles_a_hz * singles_b_hz * window_s;
}

}  // namespace fbqkd::photonics
