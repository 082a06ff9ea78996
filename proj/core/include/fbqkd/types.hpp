#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fbqkd {

enum class Basis : std::uint8_t { Z, X };

enum class Party : std::uint8_t { Alice, Bob };

/// Single-party projector. Order matches the correlation-matrix layout {+, -, 0, 1}.
enum class Projector : std::uint8_t { Plus = 0, Minus = 1, Zero = 2, One = 3 };

inline constexpr std::array<Projector, 4> kAllProjectors{Projector::Plus, Projector::Minus,
                                                         Projector::Zero, Projector::One};

constexpr Basis basis_of(Projector p) {
  return (p == Projector::Plus || p == Projector::Minus) ? Basis::X : Basis::Z;
}

/// Bit value carried by a projector: + and 0 map to 0, - and 1 map to 1.
constexpr int bit_of(Projector p) {
  return (p == Projector::Minus || p == Projector::One) ? 1 : 0;
}

constexpr Projector projector_for(Basis b, int bit) {
  if (b == Basis::X) return bit == 0 ? Projector::Plus : Projector::Minus;
  return bit == 0 ? Projector::Zero : Projector::One;
}

constexpr char projector_symbol(Projector p) {
  switch (p) {
    case Projector::Plus: return '+';
    case Projector::Minus: return '-';
    case Projector::Zero: return '0';
    case Projector::One: return '1';
  }
  return '?';
}

std::optional<Projector> parse_projector(char c);

/// One of the sixteen joint Alice/Bob outcomes.
struct ProjectorOutcome {
  Projector alice;
  Projector bob;

  constexpr int index() const { return 4 * static_cast<int>(alice) + static_cast<int>(bob); }
  static constexpr ProjectorOutcome from_index(int i) {
    return {static_cast<Projector>(i / 4), static_cast<Projector>(i % 4)};
  }
  constexpr bool matched_basis() const { return basis_of(alice) == basis_of(bob); }

  /// Two-character label such as "+-" or "01".
  std::string label() const { return {projector_symbol(alice), projector_symbol(bob)}; }
  static std::optional<ProjectorOutcome> parse(std::string_view label);

  friend constexpr bool operator==(ProjectorOutcome, ProjectorOutcome) = default;
};

/// Detector channels D1..D6. D1-D3 belong to Alice, D4-D6 to Bob.
enum class DetectorId : std::uint8_t { D1 = 1, D2, D3, D4, D5, D6 };

inline constexpr int kNumDetectors = 6;

constexpr int detector_index(DetectorId d) { return static_cast<int>(d) - 1; }
constexpr DetectorId detector_from_index(int i) { return static_cast<DetectorId>(i + 1); }
constexpr Party party_of(DetectorId d) {
  return static_cast<int>(d) <= 3 ? Party::Alice : Party::Bob;
}
std::string detector_name(DetectorId d);
std::optional<DetectorId> parse_detector(std::string_view name);

/// A single detection: detector channel and arrival time in integer picoseconds.
struct TimestampRecord {
  DetectorId detector;
  std::int64_t time_ps;

  friend constexpr bool operator==(const TimestampRecord&, const TimestampRecord&) = default;
};

/// Time order used throughout: time first, detector id as tie-break.
constexpr bool record_before(const TimestampRecord& a, const TimestampRecord& b) {
  return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.detector < b.detector;
}

}  // namespace fbqkd
