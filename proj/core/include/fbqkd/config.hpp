#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fbqkd/channel.hpp"
#include "fbqkd/photonics.hpp"
#include "fbqkd/receiver.hpp"

namespace fbqkd {

inline constexpr int kConfigSchemaVersion = 1;

/// Measured excess loss of one of the available spools (connectors, splices).
struct SpoolEntry {
  double length_km = 0.0;
  double excess_loss_db = 0.0;

  friend bool operator==(const SpoolEntry&, const SpoolEntry&) = default;
};

struct DriftConfig {
  /// deg / km / degC. Unset means the value predicted from the thermal coefficients.
  std::optional<double> slope_override_deg_per_km_c = 285.0;

  friend bool operator==(const DriftConfig&, const DriftConfig&) = default;
};

struct NoiseConfig {
  double p_werner = 0.9213;
  double x_flip_prob = 0.0485;  // Bob X-basis bit flip; see detection::calibrate_x_flip

  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

struct ReceiverConfig {
  double bob_background_hz = 2000.0;  // per Bob detector, on top of dark counts

  friend bool operator==(const ReceiverConfig&, const ReceiverConfig&) = default;
};

struct SkrConfig {
  double f = 1.1;

  friend bool operator==(const SkrConfig&, const SkrConfig&) = default;
};

struct LockConfig {
  double cadence_s = 2.0;
  int sweep_points = 24;
  double noise_rel = 0.01;
  double proxy_factor = 1.0;  // control-laser theta / signal theta

  friend bool operator==(const LockConfig&, const LockConfig&) = default;
};

struct SimulationConfig {
  double segment_s = 1.0;  // unit of independent RNG streams and parallel work
  double slice_s = 0.01;   // phase is held constant within a slice
  int threads = 1;

  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

struct AnalysisConfig {
  double qber_window_s = 20.0;

  friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

struct LinkConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 20240601;
  photonics::SourceConfig source;
  photonics::ModulatorConfig modulator;
  channel::FiberSpool spool{26.0, 0.19, 0.06, 1.468, 1.1e-5, 5e-7};
  std::vector<SpoolEntry> spool_catalog{{0.0, 0.0}, {2.6, 0.906}, {8.0, 0.48}, {10.6, 1.186},
                                        {26.0, 0.06}};
  channel::TemperatureConfig temperature;
  DriftConfig drift;
  DetectorTable detectors = default_detectors();
  DelayMap delays;
  PathLossTable losses;
  ReceiverConfig receiver;
  NoiseConfig noise;
  SkrConfig skr;
  LockConfig lock;
  SimulationConfig simulation;
  AnalysisConfig analysis;

  friend bool operator==(const LinkConfig&, const LinkConfig&) = default;
};

LinkConfig default_link_config();

/// Throws ConfigError describing the first violated invariant.
void validate(const LinkConfig& cfg);

/// Pretty-printed JSON; parse(serialize(c)) == c.
std::string serialize(const LinkConfig& cfg);

/// Strict parse: unknown keys and type mismatches are errors, absent keys keep their
/// defaults, schema_version is required. Throws ConfigError.
LinkConfig parse_link_config(std::string_view json_text);
LinkConfig load_link_config(const std::filesystem::path& path);

/// Spool of the given length, with the catalog's excess loss when the length is listed
/// and the configured spool's coefficients otherwise.
channel::FiberSpool spool_for_length(const LinkConfig& cfg, double length_km);

/// Drift in rad per km per degC actually applied by the simulator.
double drift_slope_rad_per_km_c(const LinkConfig& cfg);

}  // namespace fbqkd
