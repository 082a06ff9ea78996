#pragma once

// End-to-end runs: drift + lock -> stream generation -> matching -> sifting -> QBER/SKR.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbqkd/coincidence.hpp"
#include "fbqkd/config.hpp"
#include "fbqkd/detection.hpp"
#include "fbqkd/keyproc.hpp"
#include "fbqkd/phaselock.hpp"
#include "fbqkd/qstate.hpp"
#include "fbqkd/tomography.hpp"

namespace fbqkd::scenario {

struct RunOptions {
  bool locked = true;
  double window_s = 20.0;    // QBER / fidelity window
  bool measure_car = false;  // accumulate the raw start-stop histogram
};

struct WindowStats {
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::uint64_t n_z = 0, err_z = 0, n_x = 0, err_x = 0;
  std::uint64_t n_events = 0;
  qstate::CountMatrix counts{};
  double theta_mean = 0.0;      // mean signal phase over the window
  double bob_phase_mean = 0.0;  // mean applied correction

  double eps_z() const;
  double eps_x() const;
  double se_z() const;
  double se_x() const;
  /// Overlap with the ideal correlation matrix; NaN when a basis block is empty.
  double fidelity(const detection::LinkModel& m) const;
};

struct RunResult {
  double length_km = 0.0;
  double duration_s = 0.0;
  bool locked = true;
  std::uint64_t n_events = 0;
  qstate::CountMatrix counts{};
  std::vector<WindowStats> windows;
  std::vector<phaselock::LockTraceRow> lock_trace;
  std::optional<coincidence::Histogram> histogram;
  detection::LinkModel model;

  std::uint64_t n_z() const;
  std::uint64_t n_x() const;
  keyproc::QberEstimate qber_z() const;
  keyproc::QberEstimate qber_x() const;
  double sift_ratio() const;
  double coincidence_rate_hz() const;
  double fidelity() const;
  /// Measured-mode key rate (R_r = decoded coincidence rate, alpha = eta = 1).
  double skr_bps(double f) const;
};

/// Outcome probabilities from counts, each count divided by the known transmission
/// product of its two paths before the per-block normalisation (the receivers are
/// calibrated, as in any correlation measurement with unequal arms).
/// Throws InsufficientData on an empty block.
qstate::CorrelationMatrix corrected_correlation(const qstate::CountMatrix& counts,
                                                const detection::LinkModel& m);

/// Signal phase theta(t) from the temperature process on a slice_s grid.
detection::PhaseTrajectory drift_trajectory(const LinkConfig& cfg,
                                            const channel::FiberSpool& spool,
                                            double duration_s, std::uint64_t seed);

/// Full pipeline for one spool.
RunResult run_link(const LinkConfig& cfg, const channel::FiberSpool& spool, double duration_s,
                   std::uint64_t seed, const RunOptions& options);

struct DistanceRow {
  double length_km;
  double eps_z, se_z, eps_x, se_x;
  double sift_ratio;
  double coincidence_rate_hz;
  double skr_bps;
  std::uint64_t n_sifted;
  double model_eps_z, model_eps_x, model_sift_ratio, model_skr_bps;
};

/// Locked runs over the given lengths plus the closed-form key-rate overlay.
std::vector<DistanceRow> run_skr_vs_distance(const LinkConfig& cfg,
                                             const std::vector<double>& lengths_km,
                                             double duration_s, std::uint64_t seed);

/// Key-rate bound from the rate model: R_r = pair rate, alpha eta = expected coincidences / pair
/// rate, S and QBERs from the expected counts.
DistanceRow model_row(const LinkConfig& cfg, double length_km);

RunResult run_qber_vs_time(const LinkConfig& cfg, double duration_s, bool locked,
                           std::uint64_t seed);

struct TomographyReport {
  std::vector<tomography::TomographyRecord> records;
  tomography::MleResult mle;
  double fidelity_to_psi_plus;
  double purity;
};

TomographyReport run_tomography(const LinkConfig& cfg, std::uint64_t shots_per_setting,
                                std::uint64_t seed);

struct FringeEntry {
  double theta_true;
  std::vector<phaselock::FringeSample> samples;
  phaselock::FringeFit fit;
};

std::vector<FringeEntry> run_fringe_demo(const LinkConfig& cfg,
                                         const std::vector<double>& thetas,
                                         std::uint64_t seed);

struct DecodeReport {
  std::vector<coincidence::CoincidenceEvent> events;
  qstate::CountMatrix counts{};
  keyproc::RunSummary summary;
};

/// Offline decode of a merged timestamp list (both parties, any order).
DecodeReport decode(std::vector<TimestampRecord> records, const LinkConfig& cfg);

// Deterministic text output.
std::string distance_csv(const std::vector<DistanceRow>& rows);
std::string qber_series_csv(const RunResult& r);
std::string run_summary_json(const RunResult& r, double f);
std::string tomography_json(const TomographyReport& r);
std::string fringe_csv(const std::vector<FringeEntry>& entries);
std::string fringe_fits_csv(const std::vector<FringeEntry>& entries);
std::string counts_csv(const qstate::CountMatrix& counts);

}  // namespace fbqkd::scenario
