#pragma once

// Time-tag generation from the state, channel, loss and detector models, and the
// matching closed-form rate model used for calibration and model overlays.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "fbqkd/config.hpp"
#include "fbqkd/qstate.hpp"
#include "fbqkd/types.hpp"

namespace fbqkd::detection {

/// Numbers the generator needs for one link length, resolved from a LinkConfig.
struct LinkModel {
  double pair_rate_hz = 0.0;
  double source_background_hz = 0.0;  // uncorrelated photons per party, at the chip
  std::array<double, 4> alice_t{};    // path transmission x detector efficiency, by Projector
  std::array<double, 4> bob_t{};
  std::array<double, kNumDetectors> noise_hz{};  // dark counts (+ Bob receiver background)
  std::array<double, kNumDetectors> jitter_ps{};
  double p_werner = 1.0;
  double x_flip_prob = 0.0;
  DelayMap delays;
};

/// Overall transmission (path, spool for Bob, detector efficiency) of one projector.
double effective_transmission(const LinkConfig& cfg, const channel::FiberSpool* spool,
                              Party party, Projector p);

/// Resolves the model. When `source_background_hz` is negative it is solved from
/// source.car_target on the zero-length link (see source_background_for_car).
LinkModel resolve_model(const LinkConfig& cfg, const channel::FiberSpool& spool,
                        double source_background_hz = -1.0);

/// Source background per party that makes the expected zero-length aggregate CAR equal
/// the target. Zero when the target is out of reach.
double source_background_for_car(const LinkConfig& cfg);

/// Joint outcome probabilities for one basis pair, including Bob's X flip.
/// p[a][b] with a, b the bits of Alice and Bob.
qstate::OutcomeTable joint_probabilities(const LinkModel& m, Basis alice, Basis bob, double theta,
                                    double bob_phase);

struct ExpectedRates {
  std::array<double, 16> true_hz{};        // by ProjectorOutcome::index()
  std::array<double, 16> accidental_hz{};  // singles x singles x window per outcome
  std::array<double, kNumDetectors> singles_hz{};
  double eps_z = 0.0;
  double eps_x = 0.0;
  double car = 0.0;          // aggregate histogram definition, ZZ peak at +tau
  double sift_ratio = 0.0;   // matched-basis fraction of decoded coincidences
  double sifted_hz = 0.0;
  double coincidence_hz = 0.0;

  double total_hz(int outcome) const { return true_hz[outcome] + accidental_hz[outcome]; }
};

/// Expected rates with the X analysis misaligned by theta - bob_phase.
ExpectedRates expected_rates(const LinkModel& m, double theta = 0.0, double bob_phase = 0.0);

/// Bob X-flip probability for which the zero-length expected eps_X equals target.
double calibrate_x_flip(const LinkConfig& cfg, double target_eps_x = 0.13);

/// Signal-photon phase theta(t) and Bob's X analysis phase, piecewise constant on a grid.
struct PhaseTrajectory {
  double dt_s = 1.0;
  std::vector<double> theta;
  std::vector<double> bob_phase;

  static PhaseTrajectory constant(double theta, double bob_phase = 0.0);

  double theta_at(double t_s) const;
  double bob_phase_at(double t_s) const;
};

struct PartyStreams {
  std::vector<TimestampRecord> alice;  // D1-D3, sorted by record_before
  std::vector<TimestampRecord> bob;    // D4-D6, sorted by record_before
};

/// Splits merged party streams into one stream per detector (index = detector_index).
std::array<std::vector<TimestampRecord>, kNumDetectors> per_detector(const PartyStreams& s);

/// Deterministic segment-wise generator. Pair emissions in [k*segment_s, (k+1)*segment_s)
/// come from an RNG derived from (seed, k), so segments can be produced in any order or
/// in parallel. Bob's timestamps are referenced to the one-way spool delay; all
/// timestamps carry a constant offset that keeps them nonnegative.
class StreamGenerator {
 public:
  StreamGenerator(LinkModel model, PhaseTrajectory trajectory, double duration_s,
                  std::uint64_t seed, SimulationConfig sim = {});

  std::size_t segment_count() const { return n_segments_; }

  /// Records whose pairs were emitted in segment i, each party sorted.
  PartyStreams segment(std::size_t i) const;

  /// Lower bound on every timestamp produced by segments after i.
  std::int64_t safe_time_after(std::size_t i) const;

  std::int64_t offset_ps() const { return offset_ps_; }
  const LinkModel& model() const { return model_; }

  /// Streams the whole run as globally time-ordered chunks. The second sink argument
  /// bounds what is still to come: every later record has time >= it (INT64_MAX after
  /// the last chunk). Segments are generated `threads` at a time; output does not
  /// depend on the thread count.
  void for_each_chunk(
      const std::function<void(const PartyStreams&, std::int64_t)>& sink) const;

 private:
  LinkModel model_;
  PhaseTrajectory traj_;
  double duration_s_;
  std::uint64_t seed_;
  SimulationConfig sim_;
  std::size_t n_segments_;
  std::int64_t offset_ps_;
  std::int64_t max_jitter_ps_;
};

/// Whole-run streams for the configured spool.
PartyStreams simulate_streams(const LinkConfig& cfg, double duration_s,
                              const PhaseTrajectory& trajectory, std::uint64_t seed);
PartyStreams simulate_streams(const LinkConfig& cfg, const channel::FiberSpool& spool,
                              double duration_s, const PhaseTrajectory& trajectory,
                              std::uint64_t seed);

}  // namespace fbqkd::detection
