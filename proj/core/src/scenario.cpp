#include "fbqkd/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fbqkd/error.hpp"
#include "fbqkd/rng.hpp"

namespace fbqkd::scenario {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Fixed-precision number for JSON summaries (keeps output byte-stable).
nlohmann::ordered_json num(double v, int digits = 9) {
  if (!std::isfinite(v)) return nullptr;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return nlohmann::ordered_json::parse(buf);
}

double ratio(std::uint64_t a, std::uint64_t b) {
  return b == 0 ? std::numeric_limits<double>::quiet_NaN()
                : static_cast<double>(a) / static_cast<double>(b);
}

double binomial_se(std::uint64_t err, std::uint64_t n) {
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  const double e = ratio(err, n);
  return std::sqrt(e * (1.0 - e) / static_cast<double>(n));
}

}  // namespace

double WindowStats::eps_z() const { return ratio(err_z, n_z); }
double WindowStats::eps_x() const { return ratio(err_x, n_x); }
double WindowStats::se_z() const { return binomial_se(err_z, n_z); }
double WindowStats::se_x() const { return binomial_se(err_x, n_x); }

qstate::CorrelationMatrix corrected_correlation(const qstate::CountMatrix& counts,
                                                const detection::LinkModel& m) {
  Eigen::Matrix4d w;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      w(a, b) = static_cast<double>(counts[a][b]) / (m.alice_t[a] * m.bob_t[b]);
    }
  }
  for (int bi = 0; bi < 4; bi += 2) {
    for (int bj = 0; bj < 4; bj += 2) {
      const double sum = w.block<2, 2>(bi, bj).sum();
      if (!(sum > 0.0)) throw InsufficientData("empty correlation block");
      w.block<2, 2>(bi, bj) /= sum;
    }
  }
  return qstate::CorrelationMatrix(w);
}

namespace {

double fidelity_or_nan(const qstate::CountMatrix& counts, const detection::LinkModel& m) {
  try {
    return qstate::correlation_fidelity(corrected_correlation(counts, m),
                                        qstate::ideal_correlation_matrix());
  } catch (const InsufficientData&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

double WindowStats::fidelity(const detection::LinkModel& m) const {
  return fidelity_or_nan(counts, m);
}

double RunResult::fidelity() const { return fidelity_or_nan(counts, model); }

std::uint64_t RunResult::n_z() const {
  std::uint64_t n = 0;
  for (const auto& w : windows) n += w.n_z;
  return n;
}

std::uint64_t RunResult::n_x() const {
  std::uint64_t n = 0;
  for (const auto& w : windows) n += w.n_x;
  return n;
}

keyproc::QberEstimate RunResult::qber_z() const {
  std::uint64_t e = 0;
  for (const auto& w : windows) e += w.err_z;
  return keyproc::qber_from_counts(e, n_z());
}

keyproc::QberEstimate RunResult::qber_x() const {
  std::uint64_t e = 0;
  for (const auto& w : windows) e += w.err_x;
  return keyproc::qber_from_counts(e, n_x());
}

double RunResult::sift_ratio() const {
  return n_events == 0 ? 0.0 : static_cast<double>(n_z() + n_x()) / static_cast<double>(n_events);
}

double RunResult::coincidence_rate_hz() const {
  return duration_s > 0.0 ? static_cast<double>(n_events) / duration_s : 0.0;
}

double RunResult::skr_bps(double f) const {
  if (n_events == 0 || n_z() == 0 || n_x() == 0) return 0.0;
  const double ez = std::min(0.5, qber_z().rate);
  const double ex = std::min(0.5, qber_x().rate);
  return keyproc::skr_lower_bound(ez, ex,
                                  keyproc::measured_params(f, sift_ratio(), coincidence_rate_hz()));
}

detection::PhaseTrajectory drift_trajectory(const LinkConfig& cfg,
                                            const channel::FiberSpool& spool,
                                            double duration_s, std::uint64_t seed) {
  detection::PhaseTrajectory traj;
  traj.dt_s = cfg.simulation.slice_s;
  const auto n = static_cast<std::size_t>(std::ceil(duration_s / traj.dt_s)) + 1;
  const double k = drift_slope_rad_per_km_c(cfg) * spool.length_km;
  channel::TemperatureProcess temp(cfg.temperature, derive_seed(seed, "temperature"));
  const double t0 = temp.temperature();
  traj.theta.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) temp.step(traj.dt_s);
    traj.theta.push_back(k * (temp.temperature() - t0));
  }
  traj.bob_phase.assign(n, 0.0);
  return traj;
}

RunResult run_link(const LinkConfig& cfg, const channel::FiberSpool& spool, double duration_s,
                   std::uint64_t seed, const RunOptions& opt) {
  validate(cfg);
  if (!(duration_s > 0.0)) throw InvalidArgument("run duration must be > 0");
  if (!(opt.window_s > 0.0)) throw InvalidArgument("QBER window must be > 0");

  RunResult res;
  res.length_km = spool.length_km;
  res.duration_s = duration_s;
  res.locked = opt.locked;
  res.model = detection::resolve_model(cfg, spool);

  auto traj = drift_trajectory(cfg, spool, duration_s, seed);
  if (opt.locked) {
    const double proxy = cfg.lock.proxy_factor;
    res.lock_trace = phaselock::run_lock(
        [&](double t) { return proxy * traj.theta_at(t); }, duration_s, cfg.lock.cadence_s,
        cfg.lock.sweep_points, cfg.lock.noise_rel, derive_seed(seed, "lock"));
    std::size_t row = 0;
    for (std::size_t i = 0; i < traj.bob_phase.size(); ++i) {
      const double t = static_cast<double>(i) * traj.dt_s;
      while (row + 1 < res.lock_trace.size() && res.lock_trace[row + 1].time_s <= t + 1e-9) ++row;
      traj.bob_phase[i] = res.lock_trace.empty() ? 0.0 : res.lock_trace[row].correction;
    }
  }

  const auto n_windows = static_cast<std::size_t>(std::ceil(duration_s / opt.window_s - 1e-9));
  res.windows.resize(std::max<std::size_t>(1, n_windows));
  for (std::size_t w = 0; w < res.windows.size(); ++w) {
    res.windows[w].t_start_s = static_cast<double>(w) * opt.window_s;
    res.windows[w].t_end_s = std::min(duration_s, static_cast<double>(w + 1) * opt.window_s);
  }
  {
    std::vector<double> th(res.windows.size(), 0.0), ph(res.windows.size(), 0.0);
    std::vector<std::size_t> cnt(res.windows.size(), 0);
    for (std::size_t i = 0; i + 1 < traj.theta.size(); ++i) {
      const double t = (static_cast<double>(i) + 0.5) * traj.dt_s;
      if (t >= duration_s) break;
      const auto w = std::min(res.windows.size() - 1, static_cast<std::size_t>(t / opt.window_s));
      th[w] += traj.theta[i];
      ph[w] += traj.bob_phase[i];
      ++cnt[w];
    }
    for (std::size_t w = 0; w < res.windows.size(); ++w) {
      if (cnt[w]) {
        res.windows[w].theta_mean = th[w] / static_cast<double>(cnt[w]);
        res.windows[w].bob_phase_mean = ph[w] / static_cast<double>(cnt[w]);
      }
    }
  }

  detection::StreamGenerator gen(res.model, traj, duration_s, derive_seed(seed, "streams"),
                                 cfg.simulation);
  const std::int64_t offset = gen.offset_ps();
  const auto window_ps = static_cast<std::int64_t>(std::llround(opt.window_s * 1e12));
  coincidence::StreamingMatcher matcher(cfg.delays);
  std::optional<coincidence::StreamingHistogrammer> hist;
  if (opt.measure_car) hist.emplace(50, 6 * cfg.delays.tau_ps());
  std::vector<coincidence::CoincidenceEvent> events;

  auto tally = [&] {
    for (const auto& e : events) {
      const auto w = std::min<std::size_t>(
          res.windows.size() - 1,
          static_cast<std::size_t>(std::max<std::int64_t>(0, e.alice_time_ps - offset) / window_ps));
      WindowStats& ws = res.windows[w];
      ++ws.n_events;
      ++ws.counts[static_cast<int>(e.outcome.alice)][static_cast<int>(e.outcome.bob)];
    }
    const auto sifted = keyproc::sift(events);
    for (const auto& b : sifted.bits) {
      const auto w = std::min<std::size_t>(
          res.windows.size() - 1,
          static_cast<std::size_t>(std::max<std::int64_t>(0, b.timestamp_ps - offset) / window_ps));
      WindowStats& ws = res.windows[w];
      const bool err = b.alice_bit != b.bob_bit;
      if (b.basis == Basis::Z) {
        ++ws.n_z;
        ws.err_z += err;
      } else {
        ++ws.n_x;
        ws.err_x += err;
      }
    }
    res.n_events += events.size();
    for (const auto& e : events) {
      ++res.counts[static_cast<int>(e.outcome.alice)][static_cast<int>(e.outcome.bob)];
    }
    events.clear();
  };

  gen.for_each_chunk([&](const detection::PartyStreams& c, std::int64_t bound) {
    if (bound == INT64_MAX) {
      matcher.feed(c.alice, c.bob, INT64_MAX / 2, events);
      matcher.finish(events);
      if (hist) {
        hist->feed(c.alice, c.bob, INT64_MAX / 2);
        hist->finish();
      }
    } else {
      matcher.feed(c.alice, c.bob, bound, events);
      if (hist) hist->feed(c.alice, c.bob, bound);
    }
    tally();
  });
  if (hist) res.histogram = hist->histogram();
  return res;
}

DistanceRow model_row(const LinkConfig& cfg, double length_km) {
  const auto spool = spool_for_length(cfg, length_km);
  const auto m = detection::resolve_model(cfg, spool);
  const auto r = detection::expected_rates(m);
  DistanceRow row{};
  row.length_km = length_km;
  row.model_eps_z = r.eps_z;
  row.model_eps_x = r.eps_x;
  row.model_sift_ratio = r.sift_ratio;
  keyproc::SkrParams p;
  p.f = cfg.skr.f;
  p.sift_ratio = r.sift_ratio;
  p.rate_hz = m.pair_rate_hz;
  p.alpha = r.coincidence_hz / m.pair_rate_hz;
  p.eta = 1.0;
  row.model_skr_bps = keyproc::skr_lower_bound(std::min(0.5, r.eps_z), std::min(0.5, r.eps_x), p);
  return row;
}

std::vector<DistanceRow> run_skr_vs_distance(const LinkConfig& cfg,
                                             const std::vector<double>& lengths_km,
                                             double duration_s, std::uint64_t seed) {
  auto one = [&](std::size_t i) {
    const double km = lengths_km[i];
    RunOptions opt;
    opt.locked = true;
    opt.window_s = cfg.analysis.qber_window_s;
    const auto res = run_link(cfg, spool_for_length(cfg, km), duration_s,
                              derive_seed(seed, "distance", i), opt);
    DistanceRow row = model_row(cfg, km);
    const auto qz = res.qber_z();
    const auto qx = res.qber_x();
    row.eps_z = qz.rate;
    row.se_z = qz.standard_error;
    row.eps_x = qx.rate;
    row.se_x = qx.standard_error;
    row.sift_ratio = res.sift_ratio();
    row.coincidence_rate_hz = res.coincidence_rate_hz();
    row.skr_bps = res.skr_bps(cfg.skr.f);
    row.n_sifted = res.n_z() + res.n_x();
    return row;
  };
  std::vector<DistanceRow> rows(lengths_km.size());
  if (cfg.simulation.threads > 1) {
    std::vector<std::future<DistanceRow>> jobs;
    for (std::size_t i = 0; i < lengths_km.size(); ++i) {
      jobs.push_back(std::async(std::launch::async, one, i));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) rows[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < lengths_km.size(); ++i) rows[i] = one(i);
  }
  return rows;
}

RunResult run_qber_vs_time(const LinkConfig& cfg, double duration_s, bool locked,
                           std::uint64_t seed) {
  RunOptions opt;
  opt.locked = locked;
  opt.window_s = cfg.analysis.qber_window_s;
  return run_link(cfg, cfg.spool, duration_s, seed, opt);
}

TomographyReport run_tomography(const LinkConfig& cfg, std::uint64_t shots, std::uint64_t seed) {
  validate(cfg);
  const auto rho = qstate::noisy_state(cfg.noise.p_werner, 0.0);
  TomographyReport r{tomography::simulate_counts(rho, shots, derive_seed(seed, "tomography")),
                     {qstate::DensityMatrix(rho.matrix()), 0, 0.0, {}}, 0.0, 0.0};
  tomography::MleOptions opt;
  opt.record_trace = true;
  r.mle = tomography::mle_reconstruct(r.records, opt);
  r.fidelity_to_psi_plus = qstate::fidelity_to_pure(r.mle.rho, qstate::psi_plus());
  r.purity = r.mle.rho.purity();
  return r;
}

std::vector<FringeEntry> run_fringe_demo(const LinkConfig& cfg, const std::vector<double>& thetas,
                                         std::uint64_t seed) {
  validate(cfg);
  std::vector<FringeEntry> out;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    FringeEntry e{thetas[i],
                  phaselock::sweep_fringe(thetas[i], cfg.lock.sweep_points, cfg.lock.noise_rel,
                                          derive_seed(seed, "fringe", i)),
                  {}};
    e.fit = phaselock::fit_theta(e.samples);
    out.push_back(std::move(e));
  }
  return out;
}

DecodeReport decode(std::vector<TimestampRecord> records, const LinkConfig& cfg) {
  std::vector<TimestampRecord> alice, bob;
  for (const auto& r : records) (party_of(r.detector) == Party::Alice ? alice : bob).push_back(r);
  std::sort(alice.begin(), alice.end(), record_before);
  std::sort(bob.begin(), bob.end(), record_before);
  DecodeReport rep;
  rep.events = coincidence::find_coincidences(alice, bob, cfg.delays);
  rep.counts = coincidence::count_outcomes(rep.events);
  const auto s = keyproc::sift(rep.events);
  rep.summary.fiber_km = cfg.spool.length_km;
  rep.summary.sift_ratio = s.sift_ratio;
  rep.summary.n_sifted = s.bits.size();
  const auto qz = keyproc::qber(s.bits, Basis::Z);
  const auto qx = keyproc::qber(s.bits, Basis::X);
  rep.summary.eps_z = qz.rate;
  rep.summary.se_z = qz.standard_error;
  rep.summary.eps_x = qx.rate;
  rep.summary.se_x = qx.standard_error;
  std::int64_t t0 = INT64_MAX, t1 = INT64_MIN;
  for (const auto& r : records) {
    t0 = std::min(t0, r.time_ps);
    t1 = std::max(t1, r.time_ps);
  }
  const double span_s = t1 > t0 ? static_cast<double>(t1 - t0) * 1e-12 : 0.0;
  rep.summary.skr_bps =
      span_s > 0.0
          ? keyproc::skr_lower_bound(std::min(0.5, qz.rate), std::min(0.5, qx.rate),
                                     keyproc::measured_params(
                                         cfg.skr.f, std::max(s.sift_ratio, 1e-300),
                                         static_cast<double>(rep.events.size()) / span_s))
          : 0.0;
  return rep;
}

std::string distance_csv(const std::vector<DistanceRow>& rows) {
  std::ostringstream os;
  os << "km,eps_z,se_z,eps_x,se_x,sift_ratio,coincidence_rate_hz,skr_bps,n_sifted,"
        "model_eps_z,model_eps_x,model_sift_ratio,model_skr_bps\n";
  for (const auto& r : rows) {
    os << fmt("%.3f", r.length_km) << ',' << fmt("%.6f", r.eps_z) << ',' << fmt("%.6f", r.se_z)
       << ',' << fmt("%.6f", r.eps_x) << ',' << fmt("%.6f", r.se_x) << ','
       << fmt("%.6f", r.sift_ratio) << ',' << fmt("%.4f", r.coincidence_rate_hz) << ','
       << fmt("%.4f", r.skr_bps) << ',' << r.n_sifted << ',' << fmt("%.6f", r.model_eps_z) << ','
       << fmt("%.6f", r.model_eps_x) << ',' << fmt("%.6f", r.model_sift_ratio) << ','
       << fmt("%.4f", r.model_skr_bps) << '\n';
  }
  return os.str();
}

std::string qber_series_csv(const RunResult& r) {
  std::ostringstream os;
  os << "t_start_s,t_end_s,eps_z,se_z,eps_x,se_x,n_z,n_x,fidelity,theta_rad,correction_rad\n";
  for (const auto& w : r.windows) {
    os << fmt("%.3f", w.t_start_s) << ',' << fmt("%.3f", w.t_end_s) << ','
       << fmt("%.6f", w.eps_z()) << ',' << fmt("%.6f", w.se_z()) << ',' << fmt("%.6f", w.eps_x())
       << ',' << fmt("%.6f", w.se_x()) << ',' << w.n_z << ',' << w.n_x << ','
       << fmt("%.6f", w.fidelity(r.model)) << ',' << fmt("%.6f", w.theta_mean) << ','
       << fmt("%.6f", w.bob_phase_mean) << '\n';
  }
  return os.str();
}

std::string run_summary_json(const RunResult& r, double f) {
  nlohmann::ordered_json j;
  j["fiber_km"] = num(r.length_km);
  const bool has_z = r.n_z() > 0, has_x = r.n_x() > 0;
  j["eps_z"] = has_z ? num(r.qber_z().rate) : nullptr;
  j["eps_x"] = has_x ? num(r.qber_x().rate) : nullptr;
  j["se_z"] = has_z ? num(r.qber_z().standard_error) : nullptr;
  j["se_x"] = has_x ? num(r.qber_x().standard_error) : nullptr;
  j["sift_ratio"] = num(r.sift_ratio());
  j["skr_bps"] = num(r.skr_bps(f));
  j["n_sifted"] = r.n_z() + r.n_x();
  j["duration_s"] = num(r.duration_s);
  j["locked"] = r.locked;
  j["coincidence_rate_hz"] = num(r.coincidence_rate_hz());
  return j.dump(2) + "\n";
}

std::string tomography_json(const TomographyReport& r) {
  nlohmann::ordered_json j;
  j["fidelity_to_psi_plus"] = num(r.fidelity_to_psi_plus);
  j["purity"] = num(r.purity);
  j["iterations"] = r.mle.iterations;
  j["log_likelihood"] = num(r.mle.log_likelihood, 15);
  std::uint64_t shots = r.records.empty() ? 0 : r.records.front().setting.shots;
  j["shots_per_setting"] = shots;
  nlohmann::ordered_json re = nlohmann::ordered_json::array(), im = re;
  for (int i = 0; i < 4; ++i) {
    nlohmann::ordered_json rr = nlohmann::ordered_json::array(), ii = rr;
    for (int k = 0; k < 4; ++k) {
      rr.push_back(num(r.mle.rho(i, k).real(), 8));
      ii.push_back(num(r.mle.rho(i, k).imag(), 8));
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  j["rho_real"] = re;
  j["rho_imag"] = im;
  return j.dump(2) + "\n";
}

std::string fringe_csv(const std::vector<FringeEntry>& entries) {
  std::ostringstream os;
  os << "theta_true_rad,phi_rad,intensity\n";
  for (const auto& e : entries) {
    for (const auto& s : e.samples) {
      os << fmt("%.9f", e.theta_true) << ',' << fmt("%.9f", s.phi) << ','
         << fmt("%.9e", s.intensity) << '\n';
    }
  }
  return os.str();
}

std::string fringe_fits_csv(const std::vector<FringeEntry>& entries) {
  std::ostringstream os;
  os << "theta_true_rad,theta_fit_rad,i0_fit,residual\n";
  for (const auto& e : entries) {
    os << fmt("%.9f", e.theta_true) << ',' << fmt("%.9f", e.fit.theta) << ','
       << fmt("%.9e", e.fit.i0) << ',' << fmt("%.6e", e.fit.residual) << '\n';
  }
  return os.str();
}

std::string counts_csv(const qstate::CountMatrix& counts) {
  std::ostringstream os;
  os << "alice\\bob,+,-,0,1\n";
  for (Projector a : kAllProjectors) {
    os << projector_symbol(a);
    for (Projector b : kAllProjectors) os << ',' << counts[static_cast<int>(a)][static_cast<int>(b)];
    os << '\n';
  }
  return os.str();
}

}  // namespace fbqkd::scenario
