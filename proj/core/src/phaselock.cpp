#include "fbqkd/phaselock.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "fbqkd/error.hpp"
#include "fbqkd/photonics.hpp"
#include "fbqkd/rng.hpp"

namespace fbqkd::phaselock {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double shape(double x) { return 3.0 - 4.0 * std::cos(x) + 2.0 * std::cos(2.0 * x); }
double shape_prime(double x) { return 4.0 * std::sin(x) - 4.0 * std::sin(2.0 * x); }

struct Objective {
  double i0;
  double sse;
};

/// Best I0 for fixed theta (linear least squares) and the resulting squared error.
Objective profile(std::span<const FringeSample> s, double theta) {
  double yg = 0.0, gg = 0.0;
  for (const auto& p : s) {
    const double g = shape(p.phi - theta);
    yg += p.intensity * g;
    gg += g * g;
  }
  const double i0 = yg / gg;
  double sse = 0.0;
  for (const auto& p : s) {
    const double r = p.intensity - i0 * shape(p.phi - theta);
    sse += r * r;
  }
  return {i0, sse};
}

}  // namespace

std::vector<FringeSample> sweep_fringe(double theta_true, int n_points, double noise_rel,
                                       std::uint64_t seed, double i0) {
  if (n_points < 5) throw InvalidArgument("a fringe sweep needs at least five points");
  if (!(noise_rel >= 0.0 && noise_rel < 1.0)) throw InvalidArgument("noise_rel must lie in [0, 1)");
  if (!(i0 >= 0.0)) throw InvalidArgument("i0 must be >= 0");
  Rng rng = make_rng(seed, "phaselock.sweep");
  std::normal_distribution<double> n01;
  std::vector<FringeSample> out;
  out.reserve(static_cast<std::size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    const double phi = kTwoPi * k / n_points;
    double v = photonics::fringe_intensity(theta_true, phi, i0);
    if (noise_rel > 0.0) v *= 1.0 + noise_rel * n01(rng);
    out.push_back({phi, std::max(0.0, v)});
  }
  return out;
}

FringeFit fit_theta(std::span<const FringeSample> s) {
  if (s.size() < 5) throw UnfittableData("need at least five fringe samples");
  std::vector<double> phis;
  double lo = s[0].intensity, hi = s[0].intensity, sum = 0.0;
  for (const auto& p : s) {
    if (!std::isfinite(p.phi) || !std::isfinite(p.intensity)) {
      throw UnfittableData("non-finite fringe sample");
    }
    phis.push_back(wrap(p.phi));
    lo = std::min(lo, p.intensity);
    hi = std::max(hi, p.intensity);
    sum += p.intensity;
  }
  if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(hi)))) {
    throw UnfittableData("fringe intensity is flat");
  }
  std::sort(phis.begin(), phis.end());
  double gap = phis.front() + kTwoPi - phis.back();
  for (std::size_t i = 1; i < phis.size(); ++i) gap = std::max(gap, phis[i] - phis[i - 1]);
  if (gap > std::numbers::pi + 1e-12) throw UnfittableData("samples span less than half a period");

  // Start: phase of the first circular harmonic, whose coefficient is -2 I0 e^{-i theta}.
  double c = 0.0, sn = 0.0;
  for (const auto& p : s) {
    c += p.intensity * std::cos(p.phi);
    sn += p.intensity * std::sin(p.phi);
  }
  double theta = std::atan2(-sn, -c);
  Objective obj = profile(s, theta);
  double i0 = obj.i0;

  // Levenberg-Marquardt on (I0, theta).
  double lambda = 1e-3;
  int it = 0;
  for (; it < 200; ++it) {
    double jtj00 = 0.0, jtj01 = 0.0, jtj11 = 0.0, g0 = 0.0, g1 = 0.0;
    for (const auto& p : s) {
      const double x = p.phi - theta;
      const double r = p.intensity - i0 * shape(x);
      const double j0 = shape(x);
      const double j1 = -i0 * shape_prime(x);
      jtj00 += j0 * j0;
      jtj01 += j0 * j1;
      jtj11 += j1 * j1;
      g0 += j0 * r;
      g1 += j1 * r;
    }
    bool accepted = false;
    double step_norm = 0.0;
    for (int tries = 0; tries < 30; ++tries) {
      const double a = jtj00 * (1.0 + lambda), d = jtj11 * (1.0 + lambda), b = jtj01;
      const double det = a * d - b * b;
      if (!(std::abs(det) > 0.0)) break;
      const double d_i0 = (d * g0 - b * g1) / det;
      const double d_th = (a * g1 - b * g0) / det;
      const double ni0 = i0 + d_i0;
      const double nth = theta + d_th;
      double sse = 0.0;
      for (const auto& p : s) {
        const double r = p.intensity - ni0 * shape(p.phi - nth);
        sse += r * r;
      }
      if (sse <= obj.sse) {
        step_norm = std::abs(d_th) + std::abs(d_i0) / std::max(1e-300, std::abs(ni0));
        i0 = ni0;
        theta = nth;
        obj.sse = sse;
        lambda = std::max(lambda * 0.3, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || step_norm < 1e-15) break;
  }
  if (!(i0 > 0.0)) throw UnfittableData("fit produced a non-positive fringe amplitude");
  const double n = static_cast<double>(s.size());
  const double residual = std::sqrt(obj.sse / n) / (sum / n);
  return {wrap(theta), i0, residual, it};
}

double unwrap(double previous, double new_mod_2pi) {
  const double k = std::round((previous - new_mod_2pi) / kTwoPi);
  return new_mod_2pi + k * kTwoPi;
}

ControlResult control_step(const LockState& lock, std::span<const FringeSample> samples) {
  const FringeFit fit = fit_theta(samples);
  LockState next = lock;
  next.theta_unwrapped = unwrap(lock.theta_unwrapped, fit.theta);
  next.last_fit_residual = fit.residual;
  return {next, next.theta_unwrapped, fit};
}

std::vector<LockTraceRow> run_lock(const std::function<double(double)>& control_theta,
                                   double duration_s, double cadence_s, int sweep_points,
                                   double noise_rel, std::uint64_t seed) {
  if (!(cadence_s > 0.0)) throw InvalidArgument("lock cadence must be > 0");
  LockState state;
  state.cadence_s = cadence_s;
  std::vector<LockTraceRow> rows;
  for (std::uint64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cadence_s;
    if (t >= duration_s) break;
    const auto samples =
        sweep_fringe(control_theta(t), sweep_points, noise_rel, derive_seed(seed, "lock", k));
    const auto r = control_step(state, samples);
    state = r.state;
    rows.push_back({t, r.fit.theta, state.theta_unwrapped, r.correction, r.fit.residual});
  }
  return rows;
}

void write_lock_trace_csv(std::ostream& os, std::span<const LockTraceRow> rows) {
  os << "time_s,theta_fit_rad,theta_unwrapped_rad,correction_rad,residual\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.3f,%.9f,%.9f,%.9f,%.6e\n", r.time_s, r.theta_fit,
                  r.theta_unwrapped, r.correction, r.residual);
    os << buf;
  }
}

}  // namespace fbqkd::phaselock
