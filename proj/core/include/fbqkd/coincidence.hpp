#pragma once

// Two-fold coincidence extraction and projector decoding.
//
// Matching rule: Alice records are taken in (time, detector) order. For each one, the
// unused Bob records whose delay (Bob - Alice) lies within window/2 of a nominal delay
// of that detector pair are candidates; the chosen one is the earliest, then the one
// with the smaller |residual|, then the smaller detector id, then the earlier stream
// position. Every record is used at most once.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include "fbqkd/qstate.hpp"
#include "fbqkd/receiver.hpp"
#include "fbqkd/types.hpp"

namespace fbqkd::coincidence {

struct CoincidenceEvent {
  DetectorId alice_detector;
  DetectorId bob_detector;
  std::int64_t alice_time_ps;
  std::int64_t delta_ps;  // Bob time - Alice time
  ProjectorOutcome outcome;

  std::int64_t bob_time_ps() const { return alice_time_ps + delta_ps; }
  friend bool operator==(const CoincidenceEvent&, const CoincidenceEvent&) = default;
};

/// Throws StreamOrderError unless `s` is sorted by record_before.
void check_sorted(std::span<const TimestampRecord> s, const char* name);

/// Single forward pass over two sorted streams.
std::vector<CoincidenceEvent> find_coincidences(std::span<const TimestampRecord> alice,
                                                std::span<const TimestampRecord> bob,
                                                const DelayMap& map);

/// O(n m) reference implementation of the same rule (test oracle).
std::vector<CoincidenceEvent> brute_force_coincidences(std::span<const TimestampRecord> alice,
                                                       std::span<const TimestampRecord> bob,
                                                       const DelayMap& map);

/// Splits the Alice stream near the requested times and matches the pieces
/// independently. Each split is moved forward to the next Alice gap longer than the
/// full delay reach (3 tau + window), where no Bob record can be shared between pieces,
/// so the result equals find_coincidences exactly.
std::vector<CoincidenceEvent> find_coincidences_split(std::span<const TimestampRecord> alice,
                                                      std::span<const TimestampRecord> bob,
                                                      const DelayMap& map,
                                                      std::span<const std::int64_t> split_times);

/// find_coincidences_split with evenly spaced splits, run on `threads` threads.
std::vector<CoincidenceEvent> find_coincidences_parallel(std::span<const TimestampRecord> alice,
                                                         std::span<const TimestampRecord> bob,
                                                         const DelayMap& map, int threads);

/// Incremental matcher for chunked input. feed() takes the next records of both parties
/// together with a bound: every record not yet fed has time >= complete_before_ps.
class StreamingMatcher {
 public:
  explicit StreamingMatcher(const DelayMap& map);

  void feed(std::span<const TimestampRecord> alice, std::span<const TimestampRecord> bob,
            std::int64_t complete_before_ps, std::vector<CoincidenceEvent>& out);
  /// Flushes everything still pending (end of input).
  void finish(std::vector<CoincidenceEvent>& out);

 private:
  struct BobSlot {
    TimestampRecord rec;
    bool used;
  };
  void process(std::int64_t limit_ps, std::vector<CoincidenceEvent>& out);

  DelayMap map_;
  std::deque<TimestampRecord> alice_;
  std::deque<BobSlot> bob_;
  bool have_alice_ = false;
  bool have_bob_ = false;
  TimestampRecord last_alice_{};
  TimestampRecord last_bob_{};
};

/// Delay histogram over [-span, span) with the given bin width.
class Histogram {
 public:
  Histogram(std::int64_t bin_width_ps, std::int64_t span_ps);

  std::int64_t bin_width_ps() const { return bin_width_; }
  std::int64_t span_ps() const { return span_; }
  std::size_t size() const { return counts_.size(); }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const;

  std::int64_t bin_low_ps(std::size_t i) const;
  double bin_center_ps(std::size_t i) const;

  /// Adds one entry; deltas outside the span are ignored.
  void add(std::int64_t delta_ps, std::uint64_t n = 1);
  void merge(const Histogram& other);

  friend bool operator==(const Histogram&, const Histogram&) = default;

 private:
  std::int64_t bin_width_;
  std::int64_t span_;
  std::vector<std::uint64_t> counts_;
};

Histogram delay_histogram(std::span<const CoincidenceEvent> events, std::int64_t bin_width_ps,
                          std::int64_t span_ps);

/// All Alice x Bob pairs within the span, regardless of detector (raw start-stop
/// histogram as a time tagger would produce).
Histogram raw_delay_histogram(std::span<const TimestampRecord> alice,
                              std::span<const TimestampRecord> bob, std::int64_t bin_width_ps,
                              std::int64_t span_ps);

/// Chunked version of raw_delay_histogram, same contract as StreamingMatcher::feed.
class StreamingHistogrammer {
 public:
  StreamingHistogrammer(std::int64_t bin_width_ps, std::int64_t span_ps);

  void feed(std::span<const TimestampRecord> alice, std::span<const TimestampRecord> bob,
            std::int64_t complete_before_ps);
  void finish();
  const Histogram& histogram() const { return hist_; }

 private:
  void process(std::int64_t limit_ps);

  Histogram hist_;
  std::deque<TimestampRecord> alice_;
  std::deque<TimestampRecord> bob_;
};

struct CarOptions {
  double peak_center_ps = 0.0;
  double peak_window_ps = 700.0;
  /// Centres of every coincidence peak; bins within guard_ps of any of them (or of the
  /// measured peak) are not used as background.
  std::vector<double> exclude_centers_ps;
  double guard_ps = 2000.0;
};

struct CarResult {
  double car;
  std::uint64_t peak_counts;
  double background_per_window;
  std::size_t peak_bins;
  std::size_t background_bins;
};

/// Peak-bin sum over the mean background-bin content at the same width. Throws
/// InsufficientData when there are no background bins or they are all empty.
CarResult car_estimate(const Histogram& h, const CarOptions& options);

/// CAR options for the ZZ peak at +tau with all four peak positions excluded.
CarOptions zz_car_options(const DelayMap& map);

/// 4x4 count table, rows Alice {+,-,0,1}, columns Bob {+,-,0,1}.
qstate::CountMatrix count_outcomes(std::span<const CoincidenceEvent> events);

/// CSV with columns alice_det,bob_det,delta_t_ps,outcome_label.
void write_events_csv(std::ostream& os, std::span<const CoincidenceEvent> events);

void write_histogram_csv(std::ostream& os, const Histogram& h);

}  // namespace fbqkd::coincidence
