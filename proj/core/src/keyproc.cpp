#include "fbqkd/keyproc.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fbqkd/error.hpp"

namespace fbqkd::keyproc {

SiftResult sift(std::span<const coincidence::CoincidenceEvent> events) {
  SiftResult r;
  for (const auto& e : events) {
    if (!e.outcome.matched_basis()) continue;
    r.bits.push_back({basis_of(e.outcome.alice), static_cast<std::uint8_t>(bit_of(e.outcome.alice)),
                      static_cast<std::uint8_t>(bit_of(e.outcome.bob)), e.alice_time_ps});
  }
  r.sift_ratio = events.empty() ? 0.0
                                : static_cast<double>(r.bits.size()) /
                                      static_cast<double>(events.size());
  return r;
}

QberEstimate qber_from_counts(std::uint64_t errors, std::uint64_t n) {
  if (n == 0) throw InsufficientData("no sifted bits in the requested basis");
  if (errors > n) throw InvalidArgument("more errors than bits");
  const double e = static_cast<double>(errors) / static_cast<double>(n);
  return {e, std::sqrt(e * (1.0 - e) / static_cast<double>(n)), n, errors};
}

QberEstimate qber(std::span<const SiftedBit> bits, Basis basis) {
  std::uint64_t n = 0, err = 0;
  for (const auto& b : bits) {
    if (b.basis != basis) continue;
    ++n;
    err += b.alice_bit != b.bob_bit;
  }
  return qber_from_counts(err, n);
}

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("binary_entropy needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

void validate(const SkrParams& p) {
  if (!(p.f >= 1.0)) throw InvalidArgument("reconciliation efficiency f must be >= 1");
  if (!(p.sift_ratio > 0.0 && p.sift_ratio <= 1.0)) throw InvalidArgument("S must lie in (0, 1]");
  if (!(p.rate_hz >= 0.0) || !std::isfinite(p.rate_hz)) throw InvalidArgument("R_r must be >= 0");
  if (!(p.alpha > 0.0 && p.alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
  if (!(p.eta > 0.0 && p.eta <= 1.0)) throw InvalidArgument("eta must lie in (0, 1]");
}

double skr_lower_bound(double eps_z, double eps_x, const SkrParams& p) {
  if (!(eps_z >= 0.0 && eps_z <= 0.5) || !(eps_x >= 0.0 && eps_x <= 0.5)) {
    throw InvalidArgument("QBER values must lie in [0, 0.5]");
  }
  validate(p);
  const double bracket = 1.0 - binary_entropy(eps_z) * p.f - binary_entropy(eps_x);
  return std::max(0.0, bracket) * p.sift_ratio * p.rate_hz * p.alpha * p.eta;
}

SkrParams measured_params(double f, double sift_ratio, double coincidence_rate_hz) {
  return {f, sift_ratio, coincidence_rate_hz, 1.0, 1.0};
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["fiber_km"] = s.fiber_km;
  j["eps_z"] = s.eps_z;
  j["eps_x"] = s.eps_x;
  j["se_z"] = s.se_z;
  j["se_x"] = s.se_x;
  j["sift_ratio"] = s.sift_ratio;
  j["skr_bps"] = s.skr_bps;
  j["n_sifted"] = s.n_sifted;
  return j.dump(2) + "\n";
}

}  // namespace fbqkd::keyproc
