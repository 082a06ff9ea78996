#pragma once

// Receiver wiring: detector table, decode delays and per-projector path losses.

#include <array>
#include <cstdint>
#include <optional>

#include "fbqkd/channel.hpp"
#include "fbqkd/types.hpp"

namespace fbqkd {

struct DetectorConfig {
  DetectorId id = DetectorId::D1;
  double efficiency = 0.85;
  double dark_rate_hz = 100.0;
  double jitter_sigma_s = 35e-12;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

using DetectorTable = std::array<DetectorConfig, kNumDetectors>;

DetectorTable default_detectors();
void validate(const DetectorTable& table);

/// Detector that registers a given single-party projector (six-detector wiring).
constexpr DetectorId detector_for(Party party, Projector p) {
  if (party == Party::Alice) {
    switch (p) {
      case Projector::Plus: return DetectorId::D1;
      case Projector::Minus: return DetectorId::D2;
      case Projector::Zero: return DetectorId::D2;
      case Projector::One: return DetectorId::D3;
    }
  }
  switch (p) {
    case Projector::Plus: return DetectorId::D4;
    case Projector::Minus: return DetectorId::D5;
    case Projector::Zero: return DetectorId::D5;
    case Projector::One: return DetectorId::D6;
  }
  return DetectorId::D1;
}

/// Optical delay after basis selection, in units of tau: Alice X 0, Alice Z 1,
/// Bob X 0, Bob Z 2.
constexpr int path_delay_units(Party party, Basis b) {
  if (party == Party::Alice) return b == Basis::X ? 0 : 1;
  return b == Basis::X ? 0 : 2;
}

/// Relative delay (Bob - Alice) of an outcome in units of tau: XX 0, XZ 2, ZX -1, ZZ 1.
constexpr int delay_units(ProjectorOutcome o) {
  return path_delay_units(Party::Bob, basis_of(o.bob)) -
         path_delay_units(Party::Alice, basis_of(o.alice));
}

struct DecodeEntry {
  ProjectorOutcome outcome;
  DetectorId alice;
  DetectorId bob;
  std::int64_t delay_ps;
};

/// Table of the sixteen outcomes keyed by (detector pair, relative delay).
class DelayMap {
 public:
  DelayMap() : DelayMap(10e-9, 700e-12) {}
  DelayMap(double tau_s, double window_s);

  double tau_s() const { return tau_s_; }
  double window_s() const { return window_s_; }
  std::int64_t tau_ps() const { return tau_ps_; }
  std::int64_t window_ps() const { return window_ps_; }
  /// Half window, in ps; a match needs |residual| <= half_window_ps().
  std::int64_t half_window_ps() const { return window_ps_ / 2; }

  std::int64_t delay_ps(ProjectorOutcome o) const { return delay_units(o) * tau_ps_; }
  double delay_s(ProjectorOutcome o) const { return delay_units(o) * tau_s_; }

  const std::array<DecodeEntry, 16>& entries() const { return entries_; }

  /// Outcome whose nominal delay for this detector pair lies within half a window of
  /// delta_ps, if any.
  std::optional<ProjectorOutcome> decode(DetectorId alice, DetectorId bob,
                                         std::int64_t delta_ps) const;

  /// Smallest and largest delta (Bob - Alice) that can decode to anything.
  std::int64_t min_reach_ps() const { return -tau_ps_ - half_window_ps(); }
  std::int64_t max_reach_ps() const { return 2 * tau_ps_ + half_window_ps(); }

  friend bool operator==(const DelayMap& a, const DelayMap& b) {
    return a.tau_s_ == b.tau_s_ && a.window_s_ == b.window_s_;
  }

 private:
  double tau_s_;
  double window_s_;
  std::int64_t tau_ps_;
  std::int64_t window_ps_;
  std::array<DecodeEntry, 16> entries_;
};

DelayMap delay_map_for(double tau_s, double window_s);

/// Loss in dB from the chip to the detector for each single-party projector, indexed by
/// Projector {+, -, 0, 1}.
struct PathLossTable {
  std::array<double, 4> alice_db{13.0, 13.9, 8.4, 9.1};
  std::array<double, 4> bob_db{22.5, 21.7, 16.7, 16.6};

  double loss_db(Party party, Projector p) const {
    return party == Party::Alice ? alice_db[static_cast<int>(p)] : bob_db[static_cast<int>(p)];
  }

  friend bool operator==(const PathLossTable&, const PathLossTable&) = default;
};

void validate(const PathLossTable& t);

/// 10^(-dB/10); Bob's paths are also multiplied by the spool transmission when given.
double path_transmission(const PathLossTable& table, Party party, Projector p,
                         const channel::FiberSpool* spool = nullptr);

}  // namespace fbqkd
