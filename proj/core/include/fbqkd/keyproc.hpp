#pragma once

// BBM92 sifting, QBER and the asymptotic secure-key-rate bound.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fbqkd/coincidence.hpp"
#include "fbqkd/types.hpp"

namespace fbqkd::keyproc {

struct SiftedBit {
  Basis basis;
  std::uint8_t alice_bit;
  std::uint8_t bob_bit;
  std::int64_t timestamp_ps;

  friend bool operator==(const SiftedBit&, const SiftedBit&) = default;
};

struct SiftResult {
  std::vector<SiftedBit> bits;
  double sift_ratio = 0.0;  // kept / decoded; 0 for empty input
};

SiftResult sift(std::span<const coincidence::CoincidenceEvent> events);

struct QberEstimate {
  double rate;
  double standard_error;  // sqrt(e (1 - e) / n)
  std::uint64_t n;
  std::uint64_t errors;
};

/// Throws InsufficientData when no bit of `basis` is present.
QberEstimate qber(std::span<const SiftedBit> bits, Basis basis);
QberEstimate qber_from_counts(std::uint64_t errors, std::uint64_t n);

/// H2(x) in bits, H2(0) = H2(1) = 0.
double binary_entropy(double x);

struct SkrParams {
  double f = 1.1;             // reconciliation efficiency
  double sift_ratio = 1.0;    // S
  double rate_hz = 0.0;       // R_r
  double alpha = 1.0;         // channel transmission
  double eta = 1.0;           // detection efficiency
};

void validate(const SkrParams& p);

/// max(0, 1 - f H2(eps_z) - H2(eps_x)) S R_r alpha eta.
double skr_lower_bound(double eps_z, double eps_x, const SkrParams& p);

/// Measured-mode parameters: R_r is the decoded coincidence rate, alpha = eta = 1.
SkrParams measured_params(double f, double sift_ratio, double coincidence_rate_hz);

struct RunSummary {
  double fiber_km = 0.0;
  double eps_z = 0.0;
  double eps_x = 0.0;
  double se_z = 0.0;
  double se_x = 0.0;
  double sift_ratio = 0.0;
  double skr_bps = 0.0;
  std::uint64_t n_sifted = 0;
};

/// One JSON object with the RunSummary fields, fixed formatting.
std::string summary_json(const RunSummary& s);

}  // namespace fbqkd::keyproc
