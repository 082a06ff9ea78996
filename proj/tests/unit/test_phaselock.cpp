#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fbqkd/error.hpp"
#include "fbqkd/phaselock.hpp"
#include "fbqkd/scenario.hpp"
#include "fbqkd/stats.hpp"

using namespace fbqkd;
using namespace fbqkd::phaselock;
using std::numbers::pi;

namespace {

double circ_diff(double a, double b) { return std::abs(std::remainder(a - b, 2 * pi)); }

double fringe(double phi, double theta) {
  return 3 - 4 * std::cos(phi - theta) + 2 * std::cos(2 * (phi - theta));
}

// eps_X over consecutive groups of `k` windows
std::vector<double> merged_eps_x(const std::vector<scenario::WindowStats>& w, std::size_t k) {
  std::vector<double> out;
  for (std::size_t i = 0; i + k <= w.size(); i += k) {
    std::uint64_t n = 0, e = 0;
    for (std::size_t j = i; j < i + k; ++j) {
      n += w[j].n_x;
      e += w[j].err_x;
    }
    out.push_back(static_cast<double>(e) / static_cast<double>(n));
  }
  return out;
}

}  // namespace

TEST_CASE("noiseless sweeps reproduce the fringe formula") {
  const auto s = sweep_fringe(0.0, 24, 0.0, 1, 2.0);
  REQUIRE(s.size() == 24);
  CHECK(s[0].phi == 0.0);
  CHECK(s[0].intensity == doctest::Approx(2.0));
  CHECK(s[12].phi == doctest::Approx(pi));
  CHECK(s[12].intensity == doctest::Approx(18.0));
  for (const auto& p : sweep_fringe(0.7, 24, 0.0, 1)) {
    CHECK(p.phi >= 0.0);
    CHECK(p.phi < 2 * pi);
    CHECK(p.intensity == doctest::Approx(fringe(p.phi, 0.7)).epsilon(1e-12));
  }
  CHECK(sweep_fringe(1.0, 24, 0.05, 9) == sweep_fringe(1.0, 24, 0.05, 9));
  CHECK(sweep_fringe(1.0, 24, 0.05, 9) != sweep_fringe(1.0, 24, 0.05, 10));
  CHECK_THROWS_AS(sweep_fringe(0.0, 4, 0.0, 1), InvalidArgument);
}

TEST_CASE("fit recovers theta exactly from noiseless sweeps") {
  const auto f = fit_theta(sweep_fringe(1.2, 24, 0.0, 1));
  CHECK(std::abs(f.theta - 1.2) < 1e-9);
  CHECK(f.i0 == doctest::Approx(1.0));
  CHECK(f.residual < 1e-9);
  for (int k = 0; k < 100; ++k) {
    const double theta = 2 * pi * k / 100.0;
    const auto g = fit_theta(sweep_fringe(theta, 24, 0.0, 1));
    CHECK(circ_diff(g.theta, theta) < 1e-6);
    CHECK(g.theta >= 0.0);
    CHECK(g.theta < 2 * pi);
  }
}

TEST_CASE("fit at 1% noise lands within one degree") {
  int good = 0;
  for (int k = 0; k < 1000; ++k) {
    const double theta = 2 * pi * k / 1000.0;
    const auto f = fit_theta(sweep_fringe(theta, 24, 0.01, 500 + k));
    good += circ_diff(f.theta, theta) < pi / 180.0;
  }
  MESSAGE("trials within 1 degree: " << good);
  CHECK(good >= 950);
}

TEST_CASE("no pi aliasing") {
  const auto a = fit_theta(sweep_fringe(0.0, 24, 0.0, 1));
  const auto b = fit_theta(sweep_fringe(pi, 24, 0.0, 1));
  CHECK(circ_diff(a.theta, 0.0) < 1e-9);
  CHECK(circ_diff(b.theta, pi) < 1e-9);
}

TEST_CASE("unfittable sweeps") {
  std::vector<FringeSample> flat;
  for (int i = 0; i < 10; ++i) flat.push_back({2 * pi * i / 10, 3.0});
  CHECK_THROWS_AS(fit_theta(flat), UnfittableData);
  const auto s = sweep_fringe(0.4, 24, 0.0, 1);
  CHECK_THROWS_AS(fit_theta(std::span(s).first(4)), UnfittableData);
  // eight points crowded into a quarter period
  std::vector<FringeSample> narrow;
  for (int i = 0; i < 8; ++i) {
    const double phi = 0.2 * i;
    narrow.push_back({phi, fringe(phi, 0.3)});
  }
  CHECK_THROWS_AS(fit_theta(narrow), UnfittableData);

  LockState st;
  st.theta_unwrapped = 5.0;
  CHECK_THROWS_AS(control_step(st, flat), UnfittableData);
  CHECK(st.theta_unwrapped == 5.0);
}

TEST_CASE("unwrap") {
  CHECK(unwrap(3.10, -3.12) == doctest::Approx(3.163).epsilon(1e-3));
  CHECK(unwrap(0.0, 0.1) == doctest::Approx(0.1));
  CHECK(unwrap(12.50, 0.05) == doctest::Approx(0.05 + 4 * pi));
  CHECK(unwrap(12.50, 0.05) == doctest::Approx(12.616).epsilon(1e-4));
  for (double prev : {-20.0, -1.0, 0.0, 2.5, 17.3}) {
    for (int k = 0; k < 50; ++k) {
      const double w = 2 * pi * k / 50.0;
      const double u = unwrap(prev, w);
      CHECK(std::abs(u - prev) <= pi + 1e-12);
      CHECK(circ_diff(u, w) < 1e-9);
    }
  }
}

TEST_CASE("control step tracks a slow drift exactly") {
  LockState st;
  for (int k = 0; k <= 10; ++k) {
    const double theta = 0.05 * k;
    const auto r = control_step(st, sweep_fringe(theta, 24, 0.0, 1));
    CHECK(std::abs(theta - r.correction) < 1e-6);
    CHECK(r.state.last_fit_residual < 1e-9);
    st = r.state;
  }
}

TEST_CASE("closed loop stays locked for drifts below pi per cadence") {
  for (double rate : {0.1, 0.8, 1.7, 2.6, 3.0}) {
    const auto rows = run_lock([&](double t) { return rate * t / 2.0 - 1.0; }, 100.0, 2.0, 24, 0.0, 3);
    REQUIRE(rows.size() == 50);
    for (const auto& r : rows) CHECK(std::abs(r.correction - (rate * r.time_s / 2.0 - 1.0)) < 1e-6);

    const auto noisy = run_lock([&](double t) { return rate * t / 2.0; }, 100.0, 2.0, 24, 0.01, 4);
    double worst = 0.0;
    for (const auto& r : noisy) worst = std::max(worst, std::abs(r.correction - rate * r.time_s / 2.0));
    CHECK(worst < 3.0 * pi / 180.0);
  }
  CHECK_THROWS_AS(run_lock([](double) { return 0.0; }, 10.0, 0.0, 24, 0.0, 1), InvalidArgument);
}

TEST_CASE("lock trace CSV") {
  const auto rows = run_lock([](double) { return 0.5; }, 4.0, 2.0, 24, 0.0, 1);
  std::ostringstream os;
  write_lock_trace_csv(os, rows);
  const auto s = os.str();
  CHECK(s.rfind("time_s,theta_fit_rad,theta_unwrapped_rad,correction_rad,residual\n0.000,0.5000", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
}

TEST_CASE("26 km link over 600 s: locked vs unlocked") {
  LinkConfig cfg = default_link_config();
  cfg.simulation.threads = 4;
  cfg.temperature.ramp_c_per_600s = 0.03;

  const auto locked = scenario::run_qber_vs_time(cfg, 600.0, true, 1);
  std::vector<double> ex;
  for (const auto& w : locked.windows) ex.push_back(w.eps_x());
  REQUIRE(ex.size() == 30);
  const auto mk = stats::mann_kendall(ex);
  MESSAGE("locked Mann-Kendall p = " << mk.p_value);
  CHECK(mk.p_value > 0.05);
  // per-window shot noise alone is ~0.016 at 20 s, so the band is checked on 120 s blocks
  const auto blocks = merged_eps_x(locked.windows, 6);
  const double m = stats::mean(blocks);
  for (double b : blocks) CHECK(std::abs(b - m) <= 0.03);

  const auto unlocked = scenario::run_qber_vs_time(cfg, 600.0, false, 1);
  const auto ub = merged_eps_x(unlocked.windows, 3);
  const auto [lo, hi] = std::minmax_element(ub.begin(), ub.end());
  MESSAGE("unlocked eps_X range " << *lo << " .. " << *hi);
  CHECK(*hi - *lo >= 0.05);
}
