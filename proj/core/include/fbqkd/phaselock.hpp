#pragma once

// Control-fringe tracking: sweep, fit, unwrap and the correction applied to Bob's X
// analysis phase.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace fbqkd::phaselock {

struct FringeSample {
  double phi;        // in [0, 2 pi)
  double intensity;  // >= 0

  friend bool operator==(const FringeSample&, const FringeSample&) = default;
};

/// n_points samples of I0 (3 - 4 cos(phi - theta) + 2 cos(2 (phi - theta))) on a uniform
/// phi grid, each multiplied by (1 + noise_rel N(0, 1)) and clipped at zero.
std::vector<FringeSample> sweep_fringe(double theta_true, int n_points, double noise_rel,
                                       std::uint64_t seed, double i0 = 1.0);

struct FringeFit {
  double theta;     // in [0, 2 pi)
  double i0;
  double residual;  // RMS misfit / mean intensity
  int iterations;
};

/// Least-squares fit of (I0, theta). Throws UnfittableData on fewer than five samples,
/// a gap of more than pi in phi coverage, or flat intensity.
FringeFit fit_theta(std::span<const FringeSample> samples);

/// Representative of new_mod_2pi (mod 2 pi) nearest to previous.
double unwrap(double previous, double new_mod_2pi);

struct LockState {
  double theta_unwrapped = 0.0;
  double last_fit_residual = 0.0;
  double cadence_s = 2.0;
};

struct ControlResult {
  LockState state;
  double correction;  // add to Bob's X analysis phase
  FringeFit fit;
};

/// Fits, unwraps against the lock state and returns the new state. On error the input
/// state is untouched (it is passed by value).
ControlResult control_step(const LockState& lock, std::span<const FringeSample> samples);

struct LockTraceRow {
  double time_s;
  double theta_fit;
  double theta_unwrapped;
  double correction;
  double residual;
};

/// Runs the loop at t = 0, cadence, 2 cadence, ... < duration against the control
/// laser's true phase. Sweep k uses a seed derived from (seed, k).
std::vector<LockTraceRow> run_lock(const std::function<double(double)>& control_theta,
                                   double duration_s, double cadence_s, int sweep_points,
                                   double noise_rel, std::uint64_t seed);

void write_lock_trace_csv(std::ostream& os, std::span<const LockTraceRow> rows);

}  // namespace fbqkd::phaselock
