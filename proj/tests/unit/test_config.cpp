#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "fbqkd/config.hpp"
#include "fbqkd/error.hpp"

using namespace fbqkd;
using nlohmann::json;

namespace {

std::string with(const std::function<void(json&)>& edit) {
  json j = json::parse(serialize(default_link_config()));
  edit(j);
  return j.dump();
}

}  // namespace

TEST_CASE("defaults") {
  const LinkConfig c = default_link_config();
  CHECK_NOTHROW(validate(c));
  CHECK(c.delays.tau_s() == doctest::Approx(10e-9));
  CHECK(c.delays.window_s() == doctest::Approx(700e-12));
  CHECK(c.noise.p_werner == doctest::Approx(0.9213));
  CHECK(c.detectors[3].efficiency == doctest::Approx(0.73));
  CHECK(c.detectors[5].efficiency == doctest::Approx(0.73));
  CHECK(c.detectors[0].efficiency == doctest::Approx(0.85));
  CHECK(c.skr.f == doctest::Approx(1.1));
  CHECK(c.lock.cadence_s == 2.0);
  CHECK(drift_slope_rad_per_km_c(c) == doctest::Approx(285.0 * std::numbers::pi / 180.0));
  LinkConfig predicted = c;
  predicted.drift.slope_override_deg_per_km_c.reset();
  CHECK(drift_slope_rad_per_km_c(predicted) * 180.0 / std::numbers::pi == doctest::Approx(211.0).epsilon(0.01));
}

TEST_CASE("serialize and parse round trip") {
  LinkConfig c = default_link_config();
  CHECK(parse_link_config(serialize(c)) == c);
  c.seed = 99;
  c.spool.length_km = 8.0;
  c.drift.slope_override_deg_per_km_c.reset();
  c.detectors[2].dark_rate_hz = 55.5;
  c.losses.bob_db[1] = 20.25;
  c.temperature.ramp_c_per_600s = 0.03;
  c.spool_catalog.push_back({40.0, 0.3});
  c.simulation.threads = 3;
  const auto text = serialize(c);
  const LinkConfig back = parse_link_config(text);
  CHECK(back == c);
  CHECK(serialize(back) == text);
}

TEST_CASE("absent keys keep their defaults") {
  const auto c = parse_link_config(R"({"schema_version": 1, "noise": {"p_werner": 0.9}})");
  CHECK(c.noise.p_werner == 0.9);
  CHECK(c.noise.x_flip_prob == default_link_config().noise.x_flip_prob);
  CHECK(c.spool == default_link_config().spool);
}

TEST_CASE("strict parsing") {
  CHECK_THROWS_AS(parse_link_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_link_config("[]"), ConfigError);
  CHECK_THROWS_AS(parse_link_config("{}"), ConfigError);
  CHECK_THROWS_AS(parse_link_config(R"({"schema_version": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["bogus"] = 1; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["spool"]["lenght_km"] = 1; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["spool"]["length_km"] = "26"; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["lock"]["sweep_points"] = 2.5; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["seed"] = -1; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["detectors"].erase(0); })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["detectors"][0]["id"] = "D9"; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["losses"]["alice_db"]["x"] = 1.0; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["spool_catalog"] = 3; })), ConfigError);
}

TEST_CASE("invariants are checked at load") {
  // window/2 must stay below tau/2 for unambiguous decoding
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["delays"]["window_s"] = 10e-9; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["delays"]["window_s"] = 12e-9; })), ConfigError);
  CHECK_NOTHROW(parse_link_config(with([](json& j) { j["delays"]["window_s"] = 6e-9; })));
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["noise"]["p_werner"] = 1.5; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["detectors"][1]["efficiency"] = 1.2; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["detectors"][1]["dark_rate_hz"] = -1; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["skr"]["f"] = 0.9; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["spool"]["group_index"] = 2.0; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["simulation"]["threads"] = 0; })), ConfigError);
  CHECK_THROWS_AS(parse_link_config(with([](json& j) { j["temperature"]["correlation_time_s"] = 0; })), ConfigError);
}

TEST_CASE("spool lookup") {
  const LinkConfig c = default_link_config();
  CHECK(spool_for_length(c, 0.0).excess_loss_db == 0.0);
  CHECK(spool_for_length(c, 2.6).excess_loss_db == doctest::Approx(0.906));
  CHECK(spool_for_length(c, 26.0).excess_loss_db == doctest::Approx(0.06));
  CHECK(spool_for_length(c, 13.0).excess_loss_db == c.spool.excess_loss_db);
  CHECK(spool_for_length(c, 13.0).length_km == 13.0);
}

TEST_CASE("load from file") {
  const auto dir = std::filesystem::temp_directory_path() / "fbqkd_test_config";
  std::filesystem::create_directories(dir);
  const auto path = dir / "c.json";
  std::ofstream(path) << serialize(default_link_config());
  CHECK(load_link_config(path) == default_link_config());
  CHECK_THROWS_AS(load_link_config(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}
