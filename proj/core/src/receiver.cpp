#include "fbqkd/receiver.hpp"

#include <cmath>
#include <cstdlib>

#include "fbqkd/error.hpp"

namespace fbqkd {

DetectorTable default_detectors() {
  DetectorTable t;
  for (int i = 0; i < kNumDetectors; ++i) {
    t[i].id = detector_from_index(i);
    t[i].efficiency = 0.85;
  }
  t[detector_index(DetectorId::D4)].efficiency = 0.73;
  t[detector_index(DetectorId::D6)].efficiency = 0.73;
  return t;
}

void validate(const DetectorTable& table) {
  for (int i = 0; i < kNumDetectors; ++i) {
    const auto& d = table[i];
    if (d.id != detector_from_index(i)) {
      throw InvalidArgument("detector table must list D1..D6 in order");
    }
    if (!(d.efficiency >= 0.0 && d.efficiency <= 1.0)) {
      throw InvalidArgument(detector_name(d.id) + ": efficiency must lie in [0, 1]");
    }
    if (!(d.dark_rate_hz >= 0.0)) throw InvalidArgument(detector_name(d.id) + ": dark rate < 0");
    if (!(d.jitter_sigma_s >= 0.0)) throw InvalidArgument(detector_name(d.id) + ": jitter < 0");
  }
}

DelayMap::DelayMap(double tau_s, double window_s) : tau_s_(tau_s), window_s_(window_s) {
  if (!(tau_s > 0.0)) throw InvalidArgument("tau must be > 0");
  if (!(window_s > 0.0)) throw InvalidArgument("coincidence window must be > 0");
  tau_ps_ = std::llround(tau_s * 1e12);
  window_ps_ = std::llround(window_s * 1e12);
  // Nominal delays of one detector pair are at least tau apart, so half-windows must not
  // reach half-way to the next one.
  if (!(window_ps_ / 2 < tau_ps_ / 2)) {
    throw InvalidArgument("window/2 must be smaller than tau/2 for unambiguous decoding");
  }
  for (int i = 0; i < 16; ++i) {
    const auto o = ProjectorOutcome::from_index(i);
    entries_[i] = {o, detector_for(Party::Alice, o.alice), detector_for(Party::Bob, o.bob),
                   delay_units(o) * tau_ps_};
  }
}

std::optional<ProjectorOutcome> DelayMap::decode(DetectorId alice, DetectorId bob,
                                                 std::int64_t delta_ps) const {
  const std::int64_t hw = half_window_ps();
  for (const auto& e : entries_) {
    if (e.alice == alice && e.bob == bob && std::llabs(delta_ps - e.delay_ps) <= hw) {
      return e.outcome;
    }
  }
  return std::nullopt;
}

DelayMap delay_map_for(double tau_s, double window_s) { return DelayMap(tau_s, window_s); }

void validate(const PathLossTable& t) {
  for (double v : t.alice_db)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("Alice path loss must be >= 0 dB");
  for (double v : t.bob_db)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("Bob path loss must be >= 0 dB");
}

double path_transmission(const PathLossTable& table, Party party, Projector p,
                         const channel::FiberSpool* spool) {
  const int idx = static_cast<int>(p);
  if (idx < 0 || idx > 3) throw InvalidArgument("unknown projector");
  double t = std::pow(10.0, -table.loss_db(party, p) / 10.0);
  if (party == Party::Bob && spool != nullptr) t *= channel::spool_transmission(*spool);
  return t;
}

}  // namespace fbqkd
