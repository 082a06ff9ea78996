#include "fbqkd/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <ostream>

#include "fbqkd/error.hpp"

namespace fbqkd::coincidence {

namespace {

struct Candidate {
  std::int64_t time;
  std::int64_t abs_residual;
  ProjectorOutcome outcome;
};

/// Decodes `b` against `a`; fills `c` and returns true when it is a candidate.
bool evaluate(const DelayMap& map, const TimestampRecord& a, const TimestampRecord& b,
              Candidate& c) {
  const std::int64_t delta = b.time_ps - a.time_ps;
  const auto o = map.decode(a.detector, b.detector, delta);
  if (!o) return false;
  c = {b.time_ps, std::llabs(delta - map.delay_ps(*o)), *o};
  return true;
}

/// Strictly better under (time, |residual|); later ties lose, which realises the
/// detector / position tie-breaks because candidates are visited in stream order.
bool better(const Candidate& x, const Candidate& best) {
  if (x.time != best.time) return x.time < best.time;
  return x.abs_residual < best.abs_residual;
}

CoincidenceEvent make_event(const TimestampRecord& a, const TimestampRecord& b,
                            ProjectorOutcome o) {
  return {a.detector, b.detector, a.time_ps, b.time_ps - a.time_ps, o};
}

}  // namespace

void check_sorted(std::span<const TimestampRecord> s, const char* name) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (record_before(s[i], s[i - 1])) {
      throw StreamOrderError(std::string(name) + " stream is not time-sorted at record " +
                             std::to_string(i));
    }
  }
}

std::vector<CoincidenceEvent> find_coincidences(std::span<const TimestampRecord> alice,
                                                std::span<const TimestampRecord> bob,
                                                const DelayMap& map) {
  check_sorted(alice, "Alice");
  check_sorted(bob, "Bob");
  std::vector<CoincidenceEvent> out;
  std::vector<char> used(bob.size(), 0);
  const std::int64_t min_reach = map.min_reach_ps();
  const std::int64_t max_reach = map.max_reach_ps();
  std::size_t first = 0;
  for (const auto& a : alice) {
    const std::int64_t lo = a.time_ps + min_reach;
    const std::int64_t hi = a.time_ps + max_reach;
    while (first < bob.size() && bob[first].time_ps < lo) ++first;
    std::size_t best_j = bob.size();
    Candidate best{}, c{};
    for (std::size_t j = first; j < bob.size() && bob[j].time_ps <= hi; ++j) {
      if (used[j] || !evaluate(map, a, bob[j], c)) continue;
      if (best_j == bob.size() || better(c, best)) {
        best = c;
        best_j = j;
      }
    }
    if (best_j != bob.size()) {
      used[best_j] = 1;
      out.push_back(make_event(a, bob[best_j], best.outcome));
    }
  }
  return out;
}

std::vector<CoincidenceEvent> brute_force_coincidences(std::span<const TimestampRecord> alice,
                                                       std::span<const TimestampRecord> bob,
                                                       const DelayMap& map) {
  check_sorted(alice, "Alice");
  check_sorted(bob, "Bob");
  std::vector<CoincidenceEvent> out;
  std::vector<char> used(bob.size(), 0);
  for (const auto& a : alice) {
    std::size_t best_j = bob.size();
    std::int64_t best_t = 0, best_r = 0;
    for (std::size_t j = 0; j < bob.size(); ++j) {
      if (used[j]) continue;
      const std::int64_t delta = bob[j].time_ps - a.time_ps;
      // Check every nominal delay of the pair directly instead of DelayMap::decode.
      for (const auto& e : map.entries()) {
        if (e.alice != a.detector || e.bob != bob[j].detector) continue;
        const std::int64_t r = std::llabs(delta - e.delay_ps);
        if (r > map.window_ps() / 2) continue;
        const bool take = best_j == bob.size() || bob[j].time_ps < best_t ||
                          (bob[j].time_ps == best_t &&
                           (r < best_r || (r == best_r && bob[j].detector < bob[best_j].detector)));
        if (take) {
          best_j = j;
          best_t = bob[j].time_ps;
          best_r = r;
        }
      }
    }
    if (best_j != bob.size()) {
      used[best_j] = 1;
      const std::int64_t delta = bob[best_j].time_ps - a.time_ps;
      out.push_back(make_event(a, bob[best_j], *map.decode(a.detector, bob[best_j].detector, delta)));
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> split_indices(std::span<const TimestampRecord> alice, const DelayMap& map,
                                       std::span<const std::int64_t> split_times) {
  const std::int64_t reach = map.max_reach_ps() - map.min_reach_ps();
  std::vector<std::size_t> cuts{0};
  std::vector<std::int64_t> times(split_times.begin(), split_times.end());
  std::sort(times.begin(), times.end());
  for (std::int64_t s : times) {
    auto it = std::lower_bound(alice.begin(), alice.end(), s,
                               [](const TimestampRecord& r, std::int64_t t) { return r.time_ps < t; });
    auto i = static_cast<std::size_t>(it - alice.begin());
    i = std::max(i, cuts.back() + 1);
    while (i < alice.size() && alice[i].time_ps - alice[i - 1].time_ps <= reach) ++i;
    if (i >= alice.size()) break;
    cuts.push_back(i);
  }
  cuts.push_back(alice.size());
  return cuts;
}

std::vector<CoincidenceEvent> run_piece(std::span<const TimestampRecord> alice,
                                        std::span<const TimestampRecord> bob, const DelayMap& map,
                                        std::size_t from, std::size_t to) {
  if (from >= to) return {};
  const std::int64_t lo = alice[from].time_ps + map.min_reach_ps();
  const std::int64_t hi = alice[to - 1].time_ps + map.max_reach_ps();
  auto b0 = std::lower_bound(bob.begin(), bob.end(), lo,
                             [](const TimestampRecord& r, std::int64_t t) { return r.time_ps < t; });
  auto b1 = std::upper_bound(b0, bob.end(), hi,
                             [](std::int64_t t, const TimestampRecord& r) { return t < r.time_ps; });
  return find_coincidences(alice.subspan(from, to - from),
                           std::span<const TimestampRecord>(b0, b1), map);
}

}  // namespace

std::vector<CoincidenceEvent> find_coincidences_split(std::span<const TimestampRecord> alice,
                                                      std::span<const TimestampRecord> bob,
                                                      const DelayMap& map,
                                                      std::span<const std::int64_t> split_times) {
  check_sorted(alice, "Alice");
  check_sorted(bob, "Bob");
  const auto cuts = split_indices(alice, map, split_times);
  std::vector<CoincidenceEvent> out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    auto part = run_piece(alice, bob, map, cuts[k], cuts[k + 1]);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<CoincidenceEvent> find_coincidences_parallel(std::span<const TimestampRecord> alice,
                                                         std::span<const TimestampRecord> bob,
                                                         const DelayMap& map, int threads) {
  check_sorted(alice, "Alice");
  check_sorted(bob, "Bob");
  if (threads <= 1 || alice.size() < 2) return find_coincidences(alice, bob, map);
  std::vector<std::int64_t> splits;
  const std::int64_t t0 = alice.front().time_ps;
  const std::int64_t t1 = alice.back().time_ps;
  for (int k = 1; k < threads; ++k) splits.push_back(t0 + (t1 - t0) / threads * k);
  const auto cuts = split_indices(alice, map, splits);
  std::vector<std::future<std::vector<CoincidenceEvent>>> jobs;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    jobs.push_back(std::async(std::launch::async, [&, k] {
      return run_piece(alice, bob, map, cuts[k], cuts[k + 1]);
    }));
  }
  std::vector<CoincidenceEvent> out;
  for (auto& j : jobs) {
    auto part = j.get();
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

StreamingMatcher::StreamingMatcher(const DelayMap& map) : map_(map) {}

void StreamingMatcher::feed(std::span<const TimestampRecord> alice,
                            std::span<const TimestampRecord> bob, std::int64_t complete_before_ps,
                            std::vector<CoincidenceEvent>& out) {
  for (const auto& r : alice) {
    if (have_alice_ && record_before(r, last_alice_)) {
      throw StreamOrderError("Alice records fed out of order");
    }
    last_alice_ = r;
    have_alice_ = true;
    alice_.push_back(r);
  }
  for (const auto& r : bob) {
    if (have_bob_ && record_before(r, last_bob_)) {
      throw StreamOrderError("Bob records fed out of order");
    }
    last_bob_ = r;
    have_bob_ = true;
    bob_.push_back({r, false});
  }
  // An Alice record is final once every Bob record it could reach has arrived.
  process(complete_before_ps - map_.max_reach_ps(), out);
}

void StreamingMatcher::finish(std::vector<CoincidenceEvent>& out) {
  process(INT64_MAX, out);
  bob_.clear();
}

void StreamingMatcher::process(std::int64_t limit_ps, std::vector<CoincidenceEvent>& out) {
  const std::int64_t min_reach = map_.min_reach_ps();
  const std::int64_t max_reach = map_.max_reach_ps();
  while (!alice_.empty() && alice_.front().time_ps < limit_ps) {
    const TimestampRecord a = alice_.front();
    alice_.pop_front();
    const std::int64_t lo = a.time_ps + min_reach;
    const std::int64_t hi = a.time_ps + max_reach;
    while (!bob_.empty() && bob_.front().rec.time_ps < lo) bob_.pop_front();
    BobSlot* best_slot = nullptr;
    Candidate best{}, c{};
    for (auto& slot : bob_) {
      if (slot.rec.time_ps > hi) break;
      if (slot.used || !evaluate(map_, a, slot.rec, c)) continue;
      if (!best_slot || better(c, best)) {
        best = c;
        best_slot = &slot;
      }
    }
    if (best_slot) {
      best_slot->used = true;
      out.push_back(make_event(a, best_slot->rec, best.outcome));
    }
  }
}

Histogram::Histogram(std::int64_t bin_width_ps, std::int64_t span_ps)
    : bin_width_(bin_width_ps), span_(span_ps) {
  if (bin_width_ps <= 0) throw InvalidArgument("bin width must be > 0");
  if (span_ps <= 0) throw InvalidArgument("span must be > 0");
  const auto n = static_cast<std::size_t>((2 * span_ps + bin_width_ps - 1) / bin_width_ps);
  counts_.assign(n, 0);
}

std::uint64_t Histogram::total() const {
  std::uint64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::int64_t Histogram::bin_low_ps(std::size_t i) const {
  return -span_ + static_cast<std::int64_t>(i) * bin_width_;
}

double Histogram::bin_center_ps(std::size_t i) const {
  return static_cast<double>(bin_low_ps(i)) + 0.5 * static_cast<double>(bin_width_);
}

void Histogram::add(std::int64_t delta_ps, std::uint64_t n) {
  if (delta_ps < -span_ || delta_ps >= span_) return;
  counts_[static_cast<std::size_t>((delta_ps + span_) / bin_width_)] += n;
}

void Histogram::merge(const Histogram& other) {
  if (other.bin_width_ != bin_width_ || other.span_ != span_) {
    throw InvalidArgument("cannot merge histograms with different binning");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

Histogram delay_histogram(std::span<const CoincidenceEvent> events, std::int64_t bin_width_ps,
                          std::int64_t span_ps) {
  Histogram h(bin_width_ps, span_ps);
  for (const auto& e : events) h.add(e.delta_ps);
  return h;
}

Histogram raw_delay_histogram(std::span<const TimestampRecord> alice,
                              std::span<const TimestampRecord> bob, std::int64_t bin_width_ps,
                              std::int64_t span_ps) {
  check_sorted(alice, "Alice");
  check_sorted(bob, "Bob");
  StreamingHistogrammer s(bin_width_ps, span_ps);
  s.feed(alice, bob, INT64_MIN);
  s.finish();
  return s.histogram();
}

StreamingHistogrammer::StreamingHistogrammer(std::int64_t bin_width_ps, std::int64_t span_ps)
    : hist_(bin_width_ps, span_ps) {}

void StreamingHistogrammer::feed(std::span<const TimestampRecord> alice,
                                 std::span<const TimestampRecord> bob,
                                 std::int64_t complete_before_ps) {
  if ((!alice_.empty() && !alice.empty() && record_before(alice.front(), alice_.back())) ||
      (!bob_.empty() && !bob.empty() && record_before(bob.front(), bob_.back()))) {
    throw StreamOrderError("records fed out of order");
  }
  alice_.insert(alice_.end(), alice.begin(), alice.end());
  bob_.insert(bob_.end(), bob.begin(), bob.end());
  if (complete_before_ps != INT64_MIN) process(complete_before_ps - hist_.span_ps());
}

void StreamingHistogrammer::finish() {
  process(INT64_MAX);
  bob_.clear();
}

void StreamingHistogrammer::process(std::int64_t limit_ps) {
  const std::int64_t span = hist_.span_ps();
  while (!alice_.empty() && alice_.front().time_ps < limit_ps) {
    const std::int64_t t = alice_.front().time_ps;
    alice_.pop_front();
    while (!bob_.empty() && bob_.front().time_ps < t - span) bob_.pop_front();
    for (const auto& b : bob_) {
      if (b.time_ps >= t + span) break;
      hist_.add(b.time_ps - t);
    }
  }
}

CarResult car_estimate(const Histogram& h, const CarOptions& opt) {
  std::uint64_t peak = 0;
  std::size_t peak_bins = 0;
  std::uint64_t bg = 0;
  std::size_t bg_bins = 0;
  const double half = 0.5 * opt.peak_window_ps;
  const double bw = static_cast<double>(h.bin_width_ps());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double c = h.bin_center_ps(i);
    if (std::abs(c - opt.peak_center_ps) < half) {
      peak += h.counts()[i];
      ++peak_bins;
      continue;
    }
    bool near = std::abs(c - opt.peak_center_ps) < opt.guard_ps + 0.5 * bw;
    for (double e : opt.exclude_centers_ps) near = near || std::abs(c - e) < opt.guard_ps + 0.5 * bw;
    if (near) continue;
    bg += h.counts()[i];
    ++bg_bins;
  }
  if (peak_bins == 0) throw InvalidArgument("peak window covers no histogram bin");
  if (bg_bins == 0 || bg == 0) {
    throw InsufficientData("no background counts outside the coincidence peaks");
  }
  const double per_window =
      static_cast<double>(bg) / static_cast<double>(bg_bins) * static_cast<double>(peak_bins);
  return {static_cast<double>(peak) / per_window, peak, per_window, peak_bins, bg_bins};
}

CarOptions zz_car_options(const DelayMap& map) {
  CarOptions o;
  const auto tau = static_cast<double>(map.tau_ps());
  o.peak_center_ps = tau;
  o.peak_window_ps = static_cast<double>(map.window_ps());
  o.exclude_centers_ps = {-tau, 0.0, tau, 2.0 * tau};
  o.guard_ps = std::max(2000.0, static_cast<double>(map.window_ps()));
  return o;
}

qstate::CountMatrix count_outcomes(std::span<const CoincidenceEvent> events) {
  qstate::CountMatrix m{};
  for (const auto& e : events) {
    ++m[static_cast<int>(e.outcome.alice)][static_cast<int>(e.outcome.bob)];
  }
  return m;
}

void write_events_csv(std::ostream& os, std::span<const CoincidenceEvent> events) {
  os << "alice_det,bob_det,delta_t_ps,outcome_label\n";
  for (const auto& e : events) {
    os << detector_name(e.alice_detector) << ',' << detector_name(e.bob_detector) << ','
       << e.delta_ps << ',' << e.outcome.label() << '\n';
  }
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "bin_low_ps,bin_high_ps,count\n";
  for (std::size_t i = 0; i < h.size(); ++i) {
    os << h.bin_low_ps(i) << ',' << h.bin_low_ps(i) + h.bin_width_ps() << ',' << h.counts()[i]
       << '\n';
  }
}

}  // namespace fbqkd::coincidence
