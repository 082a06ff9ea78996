#include "fbqkd/detection.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>

#include "fbqkd/error.hpp"
#include "fbqkd/photonics.hpp"
#include "fbqkd/rng.hpp"

namespace fbqkd::detection {

namespace {

constexpr double kJitterCut = 8.0;  // truncation of the Gaussian jitter, in sigma

double efficiency_of(const LinkConfig& cfg, DetectorId d) {
  return cfg.detectors[detector_index(d)].efficiency;
}

double matched_sum(const ExpectedRates& r, Basis b) {
  double s = 0.0;
  for (int i = 0; i < 16; ++i) {
    auto o = ProjectorOutcome::from_index(i);
    if (basis_of(o.alice) == b && basis_of(o.bob) == b) s += r.total_hz(i);
  }
  return s;
}

double error_sum(const ExpectedRates& r, Basis b) {
  double s = 0.0;
  for (int i = 0; i < 16; ++i) {
    auto o = ProjectorOutcome::from_index(i);
    if (basis_of(o.alice) == b && basis_of(o.bob) == b && bit_of(o.alice) != bit_of(o.bob)) {
      s += r.total_hz(i);
    }
  }
  return s;
}

qstate::MeasurementSetting setting(Basis b, double phase) {
  return b == Basis::X ? qstate::MeasurementSetting::x(phase) : qstate::MeasurementSetting::z();
}

}  // namespace

double effective_transmission(const LinkConfig& cfg, const channel::FiberSpool* spool,
                              Party party, Projector p) {
  return path_transmission(cfg.losses, party, p, spool) *
         efficiency_of(cfg, detector_for(party, p));
}

qstate::OutcomeTable joint_probabilities(const LinkModel& m, Basis alice, Basis bob,
                                         double theta, double bob_phase) {
  const auto rho = qstate::noisy_state(m.p_werner, theta);
  auto t = qstate::outcome_probabilities(rho, setting(alice, 0.0), setting(bob, bob_phase));
  if (bob == Basis::X && m.x_flip_prob > 0.0) {
    const double q = m.x_flip_prob;
    qstate::OutcomeTable f;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) f.p[a][b] = (1.0 - q) * t.p[a][b] + q * t.p[a][1 - b];
    t = f;
  }
  return t;
}

namespace {

LinkModel resolve_impl(const LinkConfig& cfg, const channel::FiberSpool& spool, double n_bg) {
  validate(cfg);
  LinkModel m;
  m.pair_rate_hz = photonics::pair_rate(cfg.source);
  m.source_background_hz = n_bg;
  const bool has_spool = spool.length_km > 0.0 || spool.excess_loss_db > 0.0;
  for (Projector p : kAllProjectors) {
    m.alice_t[static_cast<int>(p)] = effective_transmission(cfg, nullptr, Party::Alice, p);
    m.bob_t[static_cast<int>(p)] =
        effective_transmission(cfg, has_spool ? &spool : nullptr, Party::Bob, p);
  }
  for (int i = 0; i < kNumDetectors; ++i) {
    m.noise_hz[i] = cfg.detectors[i].dark_rate_hz;
    if (party_of(detector_from_index(i)) == Party::Bob) m.noise_hz[i] += cfg.receiver.bob_background_hz;
    m.jitter_ps[i] = cfg.detectors[i].jitter_sigma_s * 1e12;
  }
  m.p_werner = cfg.noise.p_werner;
  m.x_flip_prob = cfg.noise.x_flip_prob;
  m.delays = cfg.delays;
  return m;
}

}  // namespace

double source_background_for_car(const LinkConfig& cfg) {
  channel::FiberSpool none = cfg.spool;
  none.length_km = 0.0;
  none.excess_loss_db = 0.0;
  const LinkModel m = resolve_impl(cfg, none, 0.0);
  const double target = cfg.source.car_target;
  if (!(target > 1.0)) return 0.0;
  // CAR - 1 = T / (S_A S_B w) with S_X = (R + N) m_X + D_X, T the true ZZ rate.
  const ExpectedRates r = expected_rates(m);
  double true_tau = 0.0;
  for (int i = 0; i < 16; ++i) {
    auto o = ProjectorOutcome::from_index(i);
    if (basis_of(o.alice) == Basis::Z && basis_of(o.bob) == Basis::Z) true_tau += r.true_hz[i];
  }
  double ma = 0.0, mb = 0.0, da = 0.0, db = 0.0;
  for (int i = 0; i < 4; ++i) {
    ma += 0.25 * m.alice_t[i];
    mb += 0.25 * m.bob_t[i];
  }
  for (int i = 0; i < kNumDetectors; ++i) {
    (party_of(detector_from_index(i)) == Party::Alice ? da : db) += m.noise_hz[i];
  }
  const double w = m.delays.window_s();
  const double k = true_tau / (w * (target - 1.0));
  const double a = ma * mb;
  const double b = ma * db + mb * da;
  const double c = da * db - k;
  if (a <= 0.0) return 0.0;
  const double x = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
  return std::max(0.0, x - m.pair_rate_hz);
}

LinkModel resolve_model(const LinkConfig& cfg, const channel::FiberSpool& spool,
                        double source_background_hz) {
  const double n = source_background_hz >= 0.0 ? source_background_hz
                                                : source_background_for_car(cfg);
  return resolve_impl(cfg, spool, n);
}

ExpectedRates expected_rates(const LinkModel& m, double theta, double bob_phase) {
  ExpectedRates r;
  const double photons = m.pair_rate_hz + m.source_background_hz;
  r.singles_hz = m.noise_hz;
  for (Projector p : kAllProjectors) {
    r.singles_hz[detector_index(detector_for(Party::Alice, p))] +=
        0.25 * photons * m.alice_t[static_cast<int>(p)];
    r.singles_hz[detector_index(detector_for(Party::Bob, p))] +=
        0.25 * photons * m.bob_t[static_cast<int>(p)];
  }
  const double w = m.delays.window_s();
  for (Basis ba : {Basis::X, Basis::Z}) {
    for (Basis bb : {Basis::X, Basis::Z}) {
      const auto t = joint_probabilities(m, ba, bb, theta, bob_phase);
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const ProjectorOutcome o{projector_for(ba, a), projector_for(bb, b)};
          r.true_hz[o.index()] = 0.25 * m.pair_rate_hz * t.p[a][b] *
                                 m.alice_t[static_cast<int>(o.alice)] *
                                 m.bob_t[static_cast<int>(o.bob)];
          r.accidental_hz[o.index()] =
              r.singles_hz[detector_index(detector_for(Party::Alice, o.alice))] *
              r.singles_hz[detector_index(detector_for(Party::Bob, o.bob))] * w;
        }
      }
    }
  }
  const double zz = matched_sum(r, Basis::Z);
  const double xx = matched_sum(r, Basis::X);
  r.eps_z = zz > 0.0 ? error_sum(r, Basis::Z) / zz : 0.0;
  r.eps_x = xx > 0.0 ? error_sum(r, Basis::X) / xx : 0.0;
  double all = 0.0;
  for (int i = 0; i < 16; ++i) all += r.total_hz(i);
  r.coincidence_hz = all;
  r.sifted_hz = zz + xx;
  r.sift_ratio = all > 0.0 ? r.sifted_hz / all : 0.0;

  double sa = 0.0, sb = 0.0, true_tau = 0.0;
  for (int i = 0; i < kNumDetectors; ++i) {
    (party_of(detector_from_index(i)) == Party::Alice ? sa : sb) += r.singles_hz[i];
  }
  for (int i = 0; i < 16; ++i) {
    auto o = ProjectorOutcome::from_index(i);
    if (basis_of(o.alice) == Basis::Z && basis_of(o.bob) == Basis::Z) true_tau += r.true_hz[i];
  }
  const double bg = sa * sb * w;
  r.car = bg > 0.0 ? (true_tau + bg) / bg : 0.0;
  return r;
}

double calibrate_x_flip(const LinkConfig& cfg, double target) {
  channel::FiberSpool none = cfg.spool;
  none.length_km = 0.0;
  none.excess_loss_db = 0.0;
  LinkModel m = resolve_model(cfg, none);
  auto eps_at = [&](double q) {
    m.x_flip_prob = q;
    return expected_rates(m).eps_x;
  };
  double lo = 0.0, hi = 0.5;
  if (eps_at(lo) > target || eps_at(hi) < target) {
    throw InvalidArgument("target eps_X is not reachable with an X flip in [0, 0.5]");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (eps_at(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

PhaseTrajectory PhaseTrajectory::constant(double theta, double bob_phase) {
  return {1e300, {theta}, {bob_phase}};
}

namespace {

double sample_at(const std::vector<double>& v, double dt, double t) {
  if (v.empty()) return 0.0;
  if (t <= 0.0) return v.front();
  const double k = std::floor(t / dt);
  if (k >= static_cast<double>(v.size() - 1)) return v.back();
  return v[static_cast<std::size_t>(k)];
}

}  // namespace

double PhaseTrajectory::theta_at(double t) const { return sample_at(theta, dt_s, t); }
double PhaseTrajectory::bob_phase_at(double t) const { return sample_at(bob_phase, dt_s, t); }

std::array<std::vector<TimestampRecord>, kNumDetectors> per_detector(const PartyStreams& s) {
  std::array<std::vector<TimestampRecord>, kNumDetectors> out;
  for (const auto* v : {&s.alice, &s.bob})
    for (const auto& r : *v) out[detector_index(r.detector)].push_back(r);
  return out;
}

StreamGenerator::StreamGenerator(LinkModel model, PhaseTrajectory trajectory, double duration_s,
                                 std::uint64_t seed, SimulationConfig sim)
    : model_(std::move(model)),
      traj_(std::move(trajectory)),
      duration_s_(duration_s),
      seed_(seed),
      sim_(sim) {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
    throw InvalidArgument("duration must be a finite nonnegative number");
  }
  if (!(sim_.segment_s > 0.0) || !(sim_.slice_s > 0.0)) {
    throw InvalidArgument("segment and slice lengths must be > 0");
  }
  n_segments_ = static_cast<std::size_t>(std::ceil(duration_s_ / sim_.segment_s - 1e-12));
  double max_sigma = 0.0;
  for (double j : model_.jitter_ps) max_sigma = std::max(max_sigma, j);
  max_jitter_ps_ = static_cast<std::int64_t>(std::ceil(kJitterCut * max_sigma)) + 1;
  offset_ps_ = max_jitter_ps_;
}

PartyStreams StreamGenerator::segment(std::size_t seg) const {
  PartyStreams out;
  if (seg >= n_segments_) return out;
  Rng rng = make_rng(seed_, "detection.segment", seg);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> n01;
  const LinkModel& m = model_;

  auto poisson = [&](double mean) -> long long {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<long long> d(mean);
    return d(rng);
  };
  auto jitter = [&](int det) -> double {
    const double s = m.jitter_ps[det];
    if (s <= 0.0) return 0.0;
    double z;
    do {
      z = n01(rng);
    } while (std::abs(z) > kJitterCut);
    return s * z;
  };
  auto stamp = [&](double t_ps, DetectorId d) {
    return TimestampRecord{d, offset_ps_ + std::llround(t_ps + jitter(detector_index(d)))};
  };

  const double seg_start = static_cast<double>(seg) * sim_.segment_s;
  const double seg_end = std::min(duration_s_, seg_start + sim_.segment_s);
  const double tau_ps = static_cast<double>(m.delays.tau_ps());
  for (double s0 = seg_start; s0 < seg_end - 1e-15;) {
    const double s1 = std::min(seg_end, s0 + sim_.slice_s);
    const double dt = s1 - s0;
    const double mid = 0.5 * (s0 + s1);
    const double theta = traj_.theta_at(mid);
    const double phase_b = traj_.bob_phase_at(mid);
    auto emit_time = [&] { return (s0 + dt * unit(rng)) * 1e12; };

    std::array<double, kNumDetectors> singles = m.noise_hz;
    for (Projector p : kAllProjectors) {
      singles[detector_index(detector_for(Party::Alice, p))] +=
          0.25 * m.source_background_hz * m.alice_t[static_cast<int>(p)];
      singles[detector_index(detector_for(Party::Bob, p))] +=
          0.25 * m.source_background_hz * m.bob_t[static_cast<int>(p)];
    }

    for (Basis ba : {Basis::X, Basis::Z}) {
      for (Basis bb : {Basis::X, Basis::Z}) {
        const auto table = joint_probabilities(m, ba, bb, theta, phase_b);
        const double delay_a = path_delay_units(Party::Alice, ba) * tau_ps;
        const double delay_b = path_delay_units(Party::Bob, bb) * tau_ps;
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            const Projector pa = projector_for(ba, a);
            const Projector pb = projector_for(bb, b);
            const double ta = m.alice_t[static_cast<int>(pa)];
            const double tb = m.bob_t[static_cast<int>(pb)];
            const double rate = 0.25 * m.pair_rate_hz * std::max(0.0, table.p[a][b]);
            const DetectorId da = detector_for(Party::Alice, pa);
            const DetectorId db = detector_for(Party::Bob, pb);
            // Thinning: both detected here; one-sided survivors join the singles below.
            singles[detector_index(da)] += rate * ta * (1.0 - tb);
            singles[detector_index(db)] += rate * (1.0 - ta) * tb;
            const long long n = poisson(rate * ta * tb * dt);
            for (long long k = 0; k < n; ++k) {
              const double t = emit_time();
              out.alice.push_back(stamp(t + delay_a, da));
              out.bob.push_back(stamp(t + delay_b, db));
            }
          }
        }
      }
    }
    for (int i = 0; i < kNumDetectors; ++i) {
      const DetectorId d = detector_from_index(i);
      auto& dst = party_of(d) == Party::Alice ? out.alice : out.bob;
      const long long n = poisson(singles[i] * dt);
      for (long long k = 0; k < n; ++k) dst.push_back(stamp(emit_time(), d));
    }
    s0 = s1;
  }
  std::sort(out.alice.begin(), out.alice.end(), record_before);
  std::sort(out.bob.begin(), out.bob.end(), record_before);
  return out;
}

std::int64_t StreamGenerator::safe_time_after(std::size_t i) const {
  const double next_start = static_cast<double>(i + 1) * sim_.segment_s * 1e12;
  return offset_ps_ + static_cast<std::int64_t>(std::floor(next_start)) - max_jitter_ps_ - 1;
}

namespace {

/// Moves records older than `safe` from `held` into `out`, keeping the rest.
void release(std::vector<TimestampRecord>& held, std::vector<TimestampRecord>& out,
             std::int64_t safe) {
  auto cut = std::partition_point(held.begin(), held.end(),
                                  [&](const TimestampRecord& r) { return r.time_ps < safe; });
  out.assign(held.begin(), cut);
  held.erase(held.begin(), cut);
}

void merge_into(std::vector<TimestampRecord>& held, const std::vector<TimestampRecord>& fresh) {
  const auto mid = static_cast<std::ptrdiff_t>(held.size());
  held.insert(held.end(), fresh.begin(), fresh.end());
  std::inplace_merge(held.begin(), held.begin() + mid, held.end(), record_before);
}

}  // namespace

void StreamGenerator::for_each_chunk(
    const std::function<void(const PartyStreams&, std::int64_t)>& sink) const {
  const std::size_t threads = static_cast<std::size_t>(std::max(1, sim_.threads));
  PartyStreams held;
  PartyStreams chunk;
  for (std::size_t base = 0; base < n_segments_; base += threads) {
    const std::size_t end = std::min(n_segments_, base + threads);
    std::vector<PartyStreams> batch(end - base);
    if (threads == 1) {
      batch[0] = segment(base);
    } else {
      std::vector<std::future<PartyStreams>> jobs;
      for (std::size_t i = base; i < end; ++i) {
        jobs.push_back(std::async(std::launch::async, [this, i] { return segment(i); }));
      }
      for (std::size_t i = 0; i < jobs.size(); ++i) batch[i] = jobs[i].get();
    }
    for (std::size_t i = base; i < end; ++i) {
      merge_into(held.alice, batch[i - base].alice);
      merge_into(held.bob, batch[i - base].bob);
      const std::int64_t safe = safe_time_after(i);
      release(held.alice, chunk.alice, safe);
      release(held.bob, chunk.bob, safe);
      if (!chunk.alice.empty() || !chunk.bob.empty()) sink(chunk, safe);
    }
  }
  sink(held, INT64_MAX);
}

PartyStreams simulate_streams(const LinkConfig& cfg, const channel::FiberSpool& spool,
                              double duration_s, const PhaseTrajectory& trajectory,
                              std::uint64_t seed) {
  StreamGenerator gen(resolve_model(cfg, spool), trajectory, duration_s, seed, cfg.simulation);
  PartyStreams all;
  gen.for_each_chunk([&](const PartyStreams& c, std::int64_t) {
    all.alice.insert(all.alice.end(), c.alice.begin(), c.alice.end());
    all.bob.insert(all.bob.end(), c.bob.begin(), c.bob.end());
  });
  return all;
}

PartyStreams simulate_streams(const LinkConfig& cfg, double duration_s,
                              const PhaseTrajectory& trajectory, std::uint64_t seed) {
  return simulate_streams(cfg, cfg.spool, duration_s, trajectory, seed);
}

}  // namespace fbqkd::detection
