#include "fbqkd/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fbqkd/error.hpp"

namespace fbqkd {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Walks one JSON object, remembering which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    read(*it, out, join(path_, key));
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const char* key) const { return j_.contains(key); }
  const std::string& path() const { return path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + join(path_, it.key()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "configuration" : "'" + path_ + "'"; }

  static void read(const json& v, double& out, const std::string& p) {
    if (!v.is_number()) throw ConfigError("'" + p + "' must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError("'" + p + "' must be finite");
  }
  static void read(const json& v, int& out, const std::string& p) {
    if (!v.is_number_integer()) throw ConfigError("'" + p + "' must be an integer");
    out = v.get<int>();
  }
  static void read(const json& v, std::uint64_t& out, const std::string& p) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError("'" + p + "' must be a nonnegative integer");
    }
    out = v.get<std::uint64_t>();
  }
  static void read(const json& v, std::optional<double>& out, const std::string& p) {
    if (v.is_null()) {
      out.reset();
      return;
    }
    double d = 0.0;
    read(v, d, p);
    out = d;
  }
  static void read(const json& v, std::array<double, 4>& out, const std::string& p) {
    // keyed by projector symbol
    if (!v.is_object()) throw ConfigError("'" + p + "' must be an object keyed by + - 0 1");
    for (auto it = v.begin(); it != v.end(); ++it) {
      auto pr = it.key().size() == 1 ? parse_projector(it.key()[0]) : std::nullopt;
      if (!pr) throw ConfigError("unknown key '" + join(p, it.key()) + "'");
      read(*it, out[static_cast<int>(*pr)], join(p, it.key()));
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json projector_map(const std::array<double, 4>& v) {
  json j = json::object();
  for (Projector p : kAllProjectors) j[std::string(1, projector_symbol(p))] = v[static_cast<int>(p)];
  return j;
}

json to_json(const LinkConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["seed"] = c.seed;
  j["source"] = {{"brightness_hz_per_mw2", c.source.brightness_hz_per_mw2},
                 {"pump_power_mw", c.source.pump_power_mw},
                 {"saturation_power_mw", c.source.saturation_power_mw},
                 {"car_target", c.source.car_target}};
  j["modulator"] = {{"modulation_index", c.modulator.modulation_index},
                    {"bin_spacing_hz", c.modulator.bin_spacing_hz},
                    {"rf_phase_rad", c.modulator.rf_phase_rad}};
  j["spool"] = {{"length_km", c.spool.length_km},
                {"loss_db_per_km", c.spool.loss_db_per_km},
                {"excess_loss_db", c.spool.excess_loss_db},
                {"group_index", c.spool.group_index},
                {"thermo_optic_per_c", c.spool.thermo_optic_per_c},
                {"expansion_per_c", c.spool.expansion_per_c}};
  json cat = json::array();
  for (const auto& e : c.spool_catalog) {
    cat.push_back({{"length_km", e.length_km}, {"excess_loss_db", e.excess_loss_db}});
  }
  j["spool_catalog"] = cat;
  j["temperature"] = {{"initial_c", c.temperature.initial_c},
                      {"step_rms_per_600s_c", c.temperature.step_rms_per_600s_c},
                      {"correlation_time_s", c.temperature.correlation_time_s},
                      {"spool_time_constant_s", c.temperature.spool_time_constant_s},
                      {"ramp_c_per_600s", c.temperature.ramp_c_per_600s}};
  j["drift"] = {{"slope_override_deg_per_km_c",
                 c.drift.slope_override_deg_per_km_c ? json(*c.drift.slope_override_deg_per_km_c)
                                                     : json(nullptr)}};
  json dets = json::array();
  for (const auto& d : c.detectors) {
    dets.push_back({{"id", detector_name(d.id)},
                    {"efficiency", d.efficiency},
                    {"dark_rate_hz", d.dark_rate_hz},
                    {"jitter_sigma_s", d.jitter_sigma_s}});
  }
  j["detectors"] = dets;
  j["delays"] = {{"tau_s", c.delays.tau_s()}, {"window_s", c.delays.window_s()}};
  j["losses"] = {{"alice_db", projector_map(c.losses.alice_db)},
                 {"bob_db", projector_map(c.losses.bob_db)}};
  j["receiver"] = {{"bob_background_hz", c.receiver.bob_background_hz}};
  j["noise"] = {{"p_werner", c.noise.p_werner}, {"x_flip_prob", c.noise.x_flip_prob}};
  j["skr"] = {{"f", c.skr.f}};
  j["lock"] = {{"cadence_s", c.lock.cadence_s},
               {"sweep_points", c.lock.sweep_points},
               {"noise_rel", c.lock.noise_rel},
               {"proxy_factor", c.lock.proxy_factor}};
  j["simulation"] = {{"segment_s", c.simulation.segment_s},
                     {"slice_s", c.simulation.slice_s},
                     {"threads", c.simulation.threads}};
  j["analysis"] = {{"qber_window_s", c.analysis.qber_window_s}};
  return j;
}

LinkConfig from_json(const json& j) {
  LinkConfig c;
  ObjectReader root(j, "");
  if (!root.has("schema_version")) throw ConfigError("missing 'schema_version'");
  root.get("schema_version", c.schema_version);
  if (c.schema_version != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
  }
  root.get("seed", c.seed);

  if (const json* s = root.child("source")) {
    ObjectReader r(*s, "source");
    r.get("brightness_hz_per_mw2", c.source.brightness_hz_per_mw2);
    r.get("pump_power_mw", c.source.pump_power_mw);
    r.get("saturation_power_mw", c.source.saturation_power_mw);
    r.get("car_target", c.source.car_target);
    r.finish();
  }
  if (const json* s = root.child("modulator")) {
    ObjectReader r(*s, "modulator");
    r.get("modulation_index", c.modulator.modulation_index);
    r.get("bin_spacing_hz", c.modulator.bin_spacing_hz);
    r.get("rf_phase_rad", c.modulator.rf_phase_rad);
    r.finish();
  }
  if (const json* s = root.child("spool")) {
    ObjectReader r(*s, "spool");
    r.get("length_km", c.spool.length_km);
    r.get("loss_db_per_km", c.spool.loss_db_per_km);
    r.get("excess_loss_db", c.spool.excess_loss_db);
    r.get("group_index", c.spool.group_index);
    r.get("thermo_optic_per_c", c.spool.thermo_optic_per_c);
    r.get("expansion_per_c", c.spool.expansion_per_c);
    r.finish();
  }
  if (const json* s = root.child("spool_catalog")) {
    if (!s->is_array()) throw ConfigError("'spool_catalog' must be an array");
    c.spool_catalog.clear();
    for (std::size_t i = 0; i < s->size(); ++i) {
      ObjectReader r((*s)[i], "spool_catalog[" + std::to_string(i) + "]");
      SpoolEntry e;
      r.get("length_km", e.length_km);
      r.get("excess_loss_db", e.excess_loss_db);
      r.finish();
      c.spool_catalog.push_back(e);
    }
  }
  if (const json* s = root.child("temperature")) {
    ObjectReader r(*s, "temperature");
    r.get("initial_c", c.temperature.initial_c);
    r.get("step_rms_per_600s_c", c.temperature.step_rms_per_600s_c);
    r.get("correlation_time_s", c.temperature.correlation_time_s);
    r.get("spool_time_constant_s", c.temperature.spool_time_constant_s);
    r.get("ramp_c_per_600s", c.temperature.ramp_c_per_600s);
    r.finish();
  }
  if (const json* s = root.child("drift")) {
    ObjectReader r(*s, "drift");
    r.get("slope_override_deg_per_km_c", c.drift.slope_override_deg_per_km_c);
    r.finish();
  }
  if (const json* s = root.child("detectors")) {
    if (!s->is_array() || s->size() != kNumDetectors) {
      throw ConfigError("'detectors' must be an array of six entries D1..D6");
    }
    for (int i = 0; i < kNumDetectors; ++i) {
      ObjectReader r((*s)[i], "detectors[" + std::to_string(i) + "]");
      DetectorConfig& d = c.detectors[i];
      if (const json* id = r.child("id")) {
        auto parsed = id->is_string() ? parse_detector(id->get<std::string>()) : std::nullopt;
        if (!parsed) throw ConfigError("'" + r.path() + ".id' must be one of D1..D6");
        d.id = *parsed;
      }
      r.get("efficiency", d.efficiency);
      r.get("dark_rate_hz", d.dark_rate_hz);
      r.get("jitter_sigma_s", d.jitter_sigma_s);
      r.finish();
    }
  }
  if (const json* s = root.child("delays")) {
    ObjectReader r(*s, "delays");
    double tau = c.delays.tau_s();
    double window = c.delays.window_s();
    r.get("tau_s", tau);
    r.get("window_s", window);
    r.finish();
    try {
      c.delays = DelayMap(tau, window);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("delays: ") + e.what());
    }
  }
  if (const json* s = root.child("losses")) {
    ObjectReader r(*s, "losses");
    r.get("alice_db", c.losses.alice_db);
    r.get("bob_db", c.losses.bob_db);
    r.finish();
  }
  if (const json* s = root.child("receiver")) {
    ObjectReader r(*s, "receiver");
    r.get("bob_background_hz", c.receiver.bob_background_hz);
    r.finish();
  }
  if (const json* s = root.child("noise")) {
    ObjectReader r(*s, "noise");
    r.get("p_werner", c.noise.p_werner);
    r.get("x_flip_prob", c.noise.x_flip_prob);
    r.finish();
  }
  if (const json* s = root.child("skr")) {
    ObjectReader r(*s, "skr");
    r.get("f", c.skr.f);
    r.finish();
  }
  if (const json* s = root.child("lock")) {
    ObjectReader r(*s, "lock");
    r.get("cadence_s", c.lock.cadence_s);
    r.get("sweep_points", c.lock.sweep_points);
    r.get("noise_rel", c.lock.noise_rel);
    r.get("proxy_factor", c.lock.proxy_factor);
    r.finish();
  }
  if (const json* s = root.child("simulation")) {
    ObjectReader r(*s, "simulation");
    r.get("segment_s", c.simulation.segment_s);
    r.get("slice_s", c.simulation.slice_s);
    r.get("threads", c.simulation.threads);
    r.finish();
  }
  if (const json* s = root.child("analysis")) {
    ObjectReader r(*s, "analysis");
    r.get("qber_window_s", c.analysis.qber_window_s);
    r.finish();
  }
  root.finish();
  return c;
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

LinkConfig default_link_config() { return LinkConfig{}; }

void validate(const LinkConfig& c) {
  try {
    photonics::validate(c.source);
    photonics::validate(c.modulator);
    channel::validate(c.spool);
    channel::validate(c.temperature);
    validate(c.detectors);
    validate(c.losses);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  check(c.delays.half_window_ps() < c.delays.tau_ps() / 2,
        "delays: window/2 must be smaller than tau/2");
  for (const auto& e : c.spool_catalog) {
    check(e.length_km >= 0.0 && e.excess_loss_db >= 0.0,
          "spool_catalog entries need nonnegative length and excess loss");
  }
  if (c.drift.slope_override_deg_per_km_c) {
    check(std::isfinite(*c.drift.slope_override_deg_per_km_c), "drift slope must be finite");
  }
  check(c.receiver.bob_background_hz >= 0.0, "receiver.bob_background_hz must be >= 0");
  check(c.noise.p_werner >= 0.0 && c.noise.p_werner <= 1.0, "noise.p_werner must lie in [0, 1]");
  check(c.noise.x_flip_prob >= 0.0 && c.noise.x_flip_prob <= 1.0,
        "noise.x_flip_prob must lie in [0, 1]");
  check(c.skr.f >= 1.0, "skr.f must be >= 1");
  check(c.lock.cadence_s > 0.0, "lock.cadence_s must be > 0");
  check(c.lock.sweep_points >= 5, "lock.sweep_points must be >= 5");
  check(c.lock.noise_rel >= 0.0 && c.lock.noise_rel < 1.0, "lock.noise_rel must lie in [0, 1)");
  check(std::isfinite(c.lock.proxy_factor), "lock.proxy_factor must be finite");
  check(c.simulation.segment_s > 0.0, "simulation.segment_s must be > 0");
  check(c.simulation.slice_s > 0.0 && c.simulation.slice_s <= c.simulation.segment_s,
        "simulation.slice_s must lie in (0, segment_s]");
  check(c.simulation.threads >= 1, "simulation.threads must be >= 1");
  check(c.analysis.qber_window_s > 0.0, "analysis.qber_window_s must be > 0");
}

std::string serialize(const LinkConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

LinkConfig parse_link_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  LinkConfig c;
  try {
    c = from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
  validate(c);
  return c;
}

LinkConfig load_link_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_link_config(ss.str());
}

channel::FiberSpool spool_for_length(const LinkConfig& cfg, double length_km) {
  channel::FiberSpool s = cfg.spool;
  s.length_km = length_km;
  if (length_km == 0.0) {
    s.excess_loss_db = 0.0;
    return s;
  }
  for (const auto& e : cfg.spool_catalog) {
    if (std::abs(e.length_km - length_km) < 1e-9) {
      s.excess_loss_db = e.excess_loss_db;
      return s;
    }
  }
  return s;
}

double drift_slope_rad_per_km_c(const LinkConfig& cfg) {
  const double deg = cfg.drift.slope_override_deg_per_km_c
                         ? *cfg.drift.slope_override_deg_per_km_c
                         : channel::phase_drift_slope(cfg.spool, cfg.modulator.bin_spacing_hz);
  return deg * std::numbers::pi / 180.0;
}

}  // namespace fbqkd
