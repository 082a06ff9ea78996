#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fbqkd/channel.hpp"
#include "fbqkd/error.hpp"

using namespace fbqkd;
using namespace fbqkd::channel;
using std::numbers::pi;

namespace {

FiberSpool spool(double km, double excess = 0.0) {
  FiberSpool s;
  s.length_km = km;
  s.excess_loss_db = excess;
  return s;
}

double mean_abs_excursion(const TemperatureConfig& cfg, int runs, double horizon, double dt) {
  double sum = 0.0;
  for (int r = 0; r < runs; ++r) {
    TemperatureProcess p(cfg, 1000 + static_cast<std::uint64_t>(r));
    const double t0 = p.temperature();
    for (double t = 0.0; t < horizon - 1e-9; t += dt) p.step(dt);
    sum += std::abs(p.temperature() - t0);
  }
  return sum / runs;
}

}  // namespace

TEST_CASE("spool transmission") {
  CHECK(spool_transmission(spool(0.0)) == 1.0);
  CHECK(spool_transmission(spool(26.0, 0.06)) == doctest::Approx(0.3162).epsilon(1e-4));
  CHECK(spool_loss_db(spool(26.0, 0.06)) == doctest::Approx(5.0));
  CHECK(spool_transmission(spool(2.6, 0.906)) == doctest::Approx(0.7244).epsilon(1e-4));
  for (double a : {0.5, 3.0, 11.0}) {
    for (double b : {1.0, 7.5}) {
      CHECK(spool_transmission(spool(a + b)) ==
            doctest::Approx(spool_transmission(spool(a)) * spool_transmission(spool(b))).epsilon(1e-12));
    }
  }
  FiberSpool bad = spool(1.0);
  bad.group_index = 1.8;
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  CHECK_THROWS_AS(spool_transmission(spool(-1.0)), InvalidArgument);
}

TEST_CASE("optical path shift") {
  CHECK(optical_path_shift_cm(spool(1.0), 0.0) == 0.0);
  CHECK(optical_path_shift_cm(spool(1.0), 1.0) == doctest::Approx(1.1734).epsilon(1e-4));
  CHECK(optical_path_shift_cm(spool(26.0), 0.03) == doctest::Approx(0.915).epsilon(1e-3));
}

TEST_CASE("phase from path") {
  const double period = kSpeedOfLightCmPerS / 15e9;
  CHECK(period == doctest::Approx(1.9986).epsilon(1e-4));
  CHECK(phase_from_path(period, 15e9) == doctest::Approx(2 * pi));
  CHECK(phase_from_path(0.0, 15e9) == 0.0);
  CHECK(phase_from_path(1.0, 15e9) == doctest::Approx(3.1439).epsilon(1e-4));
  for (double a : {0.1, 1.7}) {
    for (double b : {0.3, 2.2}) {
      CHECK(phase_from_path(a + b, 15e9) ==
            doctest::Approx(phase_from_path(a, 15e9) + phase_from_path(b, 15e9)).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(phase_from_path(1.0, 0.0), InvalidArgument);
}

TEST_CASE("phase drift slope") {
  const double slope = phase_drift_slope(spool(26.0), 15e9);
  CHECK(std::abs(slope - 211.0) <= 2.0);
  CHECK(19.0 * 15.0 == doctest::Approx(285.0));
  CHECK(phase_drift_slope(spool(1.0), 0.0) == 0.0);
  // composition of the two steps per unit length and temperature
  CHECK(slope == doctest::Approx(phase_from_path(optical_path_shift_cm(spool(1.0), 1.0), 15e9) *
                                 180.0 / pi).epsilon(1e-14));
}

TEST_CASE("time of flight") {
  CHECK(time_of_flight_s(spool(0.0), 1) == 0.0);
  CHECK(time_of_flight_s(spool(26.0), 2) == doctest::Approx(2.546e-4).epsilon(1e-3));
  // a 1.17 cm change of optical path over two passes: 78 ps
  FiberSpool a = spool(26.0), b = spool(26.0 + 1.17e-5 / a.group_index);
  CHECK((time_of_flight_s(b, 2) - time_of_flight_s(a, 2)) * 1e12 == doctest::Approx(78.05).epsilon(1e-3));
  CHECK_THROWS_AS(time_of_flight_s(spool(1.0), 0), InvalidArgument);
}

TEST_CASE("temperature: zero noise is constant, ramp is linear") {
  TemperatureConfig c;
  c.step_rms_per_600s_c = 0.0;
  TemperatureProcess p(c, 3);
  CHECK(p.temperature() == doctest::Approx(22.0));
  for (int i = 0; i < 100; ++i) CHECK(p.step(6.0) == 0.0);
  CHECK(p.temperature() == doctest::Approx(22.0));

  c.ramp_c_per_600s = 0.03;
  TemperatureProcess r(c, 3);
  for (int i = 0; i < 600; ++i) r.step(1.0);
  CHECK(r.temperature() == doctest::Approx(22.03).epsilon(1e-12));
  CHECK_THROWS_AS(r.step(0.0), InvalidArgument);
}

TEST_CASE("temperature: 600 s excursion statistic") {
  TemperatureConfig c;
  const double m = mean_abs_excursion(c, 10000, 600.0, 2.0);
  CHECK(m >= 0.024);
  CHECK(m <= 0.036);
  CHECK(m == doctest::Approx(0.03).epsilon(0.05));

  TemperatureConfig no_lag;
  no_lag.spool_time_constant_s = 0.0;
  const double m2 = mean_abs_excursion(no_lag, 4000, 600.0, 2.0);
  CHECK(m2 == doctest::Approx(0.03).epsilon(0.05));
}

TEST_CASE("temperature: the spool lag smooths the short-time steps") {
  TemperatureConfig lag, raw;
  raw.spool_time_constant_s = 0.0;
  const double a = mean_abs_excursion(lag, 2000, 2.0, 0.1);
  const double b = mean_abs_excursion(raw, 2000, 2.0, 0.1);
  CHECK(a < 0.2 * b);
}

TEST_CASE("temperature: deterministic in the seed") {
  const TemperatureConfig c;
  const auto a = temperature_trace(c, 100.0, 0.5, 77);
  const auto b = temperature_trace(c, 100.0, 0.5, 77);
  const auto d = temperature_trace(c, 100.0, 0.5, 78);
  CHECK(a.size() == 201);
  CHECK(a == b);
  CHECK(a != d);
  CHECK(a.front() == doctest::Approx(22.0));
}

TEST_CASE("temperature config validation") {
  TemperatureConfig c;
  c.correlation_time_s = 0.0;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = {};
  c.spool_time_constant_s = -1.0;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = {};
  c.step_rms_per_600s_c = -0.1;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
}
