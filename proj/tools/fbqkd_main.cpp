// fbqkd: scenario runner for the frequency-bin entanglement QKD link simulator.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fbqkd/config.hpp"
#include "fbqkd/detection.hpp"
#include "fbqkd/error.hpp"
#include "fbqkd/records_io.hpp"
#include "fbqkd/scenario.hpp"
#include "fbqkd/tomography.hpp"

namespace fs = std::filesystem;
using namespace fbqkd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<double> duration_s;
  bool locked = true;
};

LinkConfig load_config(const Globals& g) {
  if (g.config_path.empty()) return default_link_config();
  return load_link_config(g.config_path);
}

std::uint64_t seed_of(const Globals& g, const LinkConfig& cfg) { return g.seed.value_or(cfg.seed); }

void write_file(const Globals& g, const std::string& name, const std::string& text) {
  const fs::path dir(g.out_dir);
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot open " + p.string() + " for writing");
  os << text;
  if (!os) throw Error("write failed: " + p.string());
  std::cout << p.string() << '\n';
}

int cmd_skr_vs_distance(const Globals& g, std::vector<double> lengths) {
  const auto cfg = load_config(g);
  if (lengths.empty()) {
    for (const auto& e : cfg.spool_catalog) lengths.push_back(e.length_km);
  }
  const auto rows = scenario::run_skr_vs_distance(cfg, lengths, g.duration_s.value_or(60.0),
                                                  seed_of(g, cfg));
  write_file(g, "skr_vs_distance.csv", scenario::distance_csv(rows));
  // dense model curve for overlays
  std::ostringstream dat;
  dat << "# km model_skr_bps model_eps_z model_eps_x\n";
  const double max_km = lengths.empty() ? 0.0 : *std::max_element(lengths.begin(), lengths.end());
  for (int i = 0; i <= 100; ++i) {
    const double km = max_km * i / 100.0;
    const auto m = scenario::model_row(cfg, km);
    dat << km << ' ' << m.model_skr_bps << ' ' << m.model_eps_z << ' ' << m.model_eps_x << '\n';
  }
  write_file(g, "skr_model.dat", dat.str());
  return kExitOk;
}

int cmd_qber_vs_time(const Globals& g, std::optional<double> length_km) {
  auto cfg = load_config(g);
  if (length_km) cfg.spool = spool_for_length(cfg, *length_km);
  const auto res =
      scenario::run_qber_vs_time(cfg, g.duration_s.value_or(600.0), g.locked, seed_of(g, cfg));
  write_file(g, "qber_vs_time.csv", scenario::qber_series_csv(res));
  write_file(g, "summary.json", scenario::run_summary_json(res, cfg.skr.f));
  if (g.locked) {
    std::ostringstream os;
    phaselock::write_lock_trace_csv(os, res.lock_trace);
    write_file(g, "lock_trace.csv", os.str());
  }
  return kExitOk;
}

int cmd_tomography(const Globals& g, std::uint64_t shots) {
  const auto cfg = load_config(g);
  const auto rep = scenario::run_tomography(cfg, shots, seed_of(g, cfg));
  write_file(g, "tomography.json", scenario::tomography_json(rep));
  std::ostringstream rho, counts;
  tomography::write_density_csv(rho, rep.mle.rho.matrix());
  tomography::write_records_csv(counts, rep.records);
  write_file(g, "density_matrix.csv", rho.str());
  write_file(g, "tomography_counts.csv", counts.str());
  return kExitOk;
}

int cmd_fringe(const Globals& g, std::vector<double> thetas) {
  const auto cfg = load_config(g);
  if (thetas.empty()) thetas = {0.0, 1.2, std::numbers::pi};
  const auto entries = scenario::run_fringe_demo(cfg, thetas, seed_of(g, cfg));
  write_file(g, "fringe.csv", scenario::fringe_csv(entries));
  write_file(g, "fringe_fits.csv", scenario::fringe_fits_csv(entries));
  return kExitOk;
}

int cmd_simulate(const Globals& g, const std::string& name) {
  const auto cfg = load_config(g);
  const double duration = g.duration_s.value_or(10.0);
  const auto seed = seed_of(g, cfg);
  const auto traj = scenario::drift_trajectory(cfg, cfg.spool, duration, seed);
  const auto s = detection::simulate_streams(cfg, duration, traj, seed);
  std::vector<TimestampRecord> all(s.alice);
  all.insert(all.end(), s.bob.begin(), s.bob.end());
  std::sort(all.begin(), all.end(), record_before);
  fs::create_directories(g.out_dir);
  const fs::path p = fs::path(g.out_dir) / name;
  save_records(p, all);
  std::cout << p.string() << '\n';
  return kExitOk;
}

int cmd_decode(const Globals& g, const std::string& input) {
  const auto cfg = load_config(g);
  auto rep = scenario::decode(load_records(input), cfg);
  std::ostringstream ev;
  coincidence::write_events_csv(ev, rep.events);
  write_file(g, "events.csv", ev.str());
  write_file(g, "counts.csv", scenario::counts_csv(rep.counts));
  write_file(g, "summary.json", keyproc::summary_json(rep.summary));
  return kExitOk;
}

int cmd_validate_config(const Globals& g) {
  const auto cfg = load_config(g);
  validate(cfg);
  std::cout << serialize(cfg);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-bin entanglement QKD link simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed = 0;
  double duration = 0.0;
  app.add_option("--config", g.config_path, "JSON link configuration (defaults if omitted)");
  auto* seed_opt = app.add_option("--seed", seed, "root seed (overrides the config)");
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
  auto* dur_opt = app.add_option("--duration", duration, "simulated seconds")
                      ->check(CLI::PositiveNumber);
  app.add_flag("--locked,!--unlocked", g.locked, "phase lock on (default) or off");

  std::vector<double> lengths;
  auto* skr = app.add_subcommand("skr-vs-distance", "locked runs over spool lengths + model curve");
  skr->add_option("--lengths", lengths, "spool lengths in km (default: the spool catalog)")
      ->delimiter(',');

  std::optional<double> length_km;
  auto* qvt = app.add_subcommand("qber-vs-time", "windowed QBER and fidelity time series");
  qvt->add_option("--length", length_km, "spool length in km (default: the configured spool)");

  std::uint64_t shots = 1000000;
  auto* tomo = app.add_subcommand("tomography", "36-setting tomography and MLE reconstruction");
  tomo->add_option("--shots", shots, "shots per setting")->capture_default_str();

  std::vector<double> thetas;
  auto* fringe = app.add_subcommand("fringe", "control-fringe sweeps and fits");
  fringe->add_option("--theta", thetas, "true phases in rad")->delimiter(',');

  std::string tags_name = "timestamps.bin";
  auto* sim = app.add_subcommand("simulate", "write a raw timestamp file for the configured spool");
  sim->add_option("--name", tags_name, "file name (.csv for text)")->capture_default_str();

  std::string input;
  auto* dec = app.add_subcommand("decode", "offline decode of a timestamp file");
  dec->add_option("--input", input, "timestamp file (binary or .csv)")->required();

  auto* val = app.add_subcommand("validate-config", "check a configuration and print it normalised");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (*seed_opt) g.seed = seed;
  if (*dur_opt) g.duration_s = duration;

  try {
    if (*skr) return cmd_skr_vs_distance(g, lengths);
    if (*qvt) return cmd_qber_vs_time(g, length_km);
    if (*tomo) return cmd_tomography(g, shots);
    if (*fringe) return cmd_fringe(g, thetas);
    if (*sim) return cmd_simulate(g, tags_name);
    if (*dec) return cmd_decode(g, input);
    if (*val) return cmd_validate_config(g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
