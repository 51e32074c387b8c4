#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nvtherm/cce.hpp"
#include "nvtherm/config.hpp"
#include "nvtherm/decay_fit.hpp"
#include "nvtherm/parallel.hpp"
#include "nvtherm/thermometry.hpp"

namespace nvtherm {

enum class Scenario {
  decay_study,
  calibration_sweep,
  drift_track,
  sensitivity_sweep,
  heat_profile,
};

inline const std::vector<std::pair<std::string, Scenario>>& scenario_names() {
  static const std::vector<std::pair<std::string, Scenario>> names = {
      {"decay_study", Scenario::decay_study},
      {"calibration_sweep", Scenario::calibration_sweep},
      {"drift_track", Scenario::drift_track},
      {"sensitivity_sweep", Scenario::sensitivity_sweep},
      {"heat_profile", Scenario::heat_profile},
  };
  return names;
}

inline Scenario scenario_from_name(const std::string& name) {
  for (const auto& [n, s] : scenario_names())
    if (n == name) return s;
  throw ConfigError("scenario: unknown scenario '" + name + "'");
}

inline std::string scenario_name(Scenario s) {
  for (const auto& [n, sc] : scenario_names())
    if (sc == s) return n;
  return "?";
}

// Steady-state point-source heating: Delta T(d) = A / d with an enforced
// minimum standoff. Synthetic truth generator only.
struct HeatSourceModel {
  double source_power_k_um = 1.0;  // A: Delta T in K at 1 um
  std::vector<Eigen::Vector2d> positions_um;
  double ambient_k = 295.0;
  double min_standoff_um = 0.1;

  double delta_t_k(double distance_um) const {
    if (distance_um < min_standoff_um)
      throw std::invalid_argument("HeatSourceModel: distance below minimum standoff");
    return source_power_k_um / distance_um;
  }
};

struct ScenarioConfig {
  Scenario scenario = Scenario::decay_study;
  SpinSystemSpec spin;
  std::optional<BathConfig> bath;
  ReadoutModel readout;
  CalibrationSpec calibration;
  std::uint64_t master_seed = 1;
  std::string output_dir;
  KeyValueConfig raw;  // retained for scenario-specific axes and the digest

  static ScenarioConfig from_config(const KeyValueConfig& kv);
};

namespace detail {

inline const std::set<std::string>& allowed_keys(Scenario s) {
  static const std::set<std::string> common = {
      "scenario", "master_seed", "output_dir",
      "spin.d_zfs_mhz", "spin.b_z_mt", "spin.delta_d_khz",
      "readout.counts_bright", "readout.counts_dark", "readout.readouts_per_point",
      "readout.sequence_overhead_us",
      "calibration.c_t_khz_per_k", "calibration.d_ref_mhz", "calibration.t_ref_k",
      "calibration.laser_heating_mk", "calibration.microwave_heating_mk",
      "bath.concentration", "bath.cutoff_radius_nm", "bath.exclusion_radius_nm",
      "bath.max_expected_spins",
  };
  static const std::map<Scenario, std::set<std::string>> extra = {
      {Scenario::decay_study,
       {"decay_study.concentrations", "decay_study.b_fields_mt", "decay_study.seeds",
        "decay_study.tau_min_us", "decay_study.tau_max_us", "decay_study.tau_points",
        "decay_study.min_pair_phase_rad", "decay_study.pair_separation_cutoff_nm"}},
      {Scenario::calibration_sweep,
       {"calibration_sweep.temperatures_k", "calibration_sweep.noise",
        "calibration_sweep.t_d_us", "calibration_sweep.stretch",
        "calibration_sweep.tau_max_us", "calibration_sweep.tau_points",
        "calibration_sweep.base_offset_khz"}},
      {Scenario::drift_track,
       {"drift_track.n_points", "drift_track.interval_s", "drift_track.drift_amplitude_mk",
        "drift_track.drift_period_s", "drift_track.t_d_us", "drift_track.stretch",
        "drift_track.tau_max_us", "drift_track.tau_points", "drift_track.base_offset_khz"}},
      {Scenario::sensitivity_sweep,
       {"sensitivity_sweep.tau_max_list_us", "sensitivity_sweep.reps",
        "sensitivity_sweep.tau_points", "sensitivity_sweep.t_d_us",
        "sensitivity_sweep.delta_d_khz"}},
      {Scenario::heat_profile,
       {"heat_profile.distances_um", "heat_profile.source_power_k_um",
        "heat_profile.ambient_k", "heat_profile.min_standoff_um", "heat_profile.t_d_us",
        "heat_profile.tau_op_us", "heat_profile.stretch"}},
  };
  static std::map<Scenario, std::set<std::string>> merged = [] {
    std::map<Scenario, std::set<std::string>> m;
    for (const auto& [sc, keys] : extra) {
      m[sc] = common;
      m[sc].insert(keys.begin(), keys.end());
    }
    return m;
  }();
  return merged.at(s);
}

inline std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Deterministic per-task seed stream from the master seed (splitmix64 step).
inline std::uint64_t task_seed(std::uint64_t master, std::uint64_t task) {
  std::uint64_t z = master + (task + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline ScenarioConfig ScenarioConfig::from_config(const KeyValueConfig& kv) {
  ScenarioConfig cfg;
  cfg.raw = kv;
  cfg.scenario = scenario_from_name(kv.require_string("scenario"));

  std::vector<std::string> errors;
  const auto& allowed = detail::allowed_keys(cfg.scenario);
  for (const auto& [key, value] : kv.items())
    if (!allowed.count(key)) errors.push_back(key + ": unknown key");
  if (!errors.empty()) {
    std::string msg = "config schema violations:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }

  cfg.master_seed = static_cast<std::uint64_t>(kv.get_int("master_seed", 1));
  cfg.output_dir = kv.get_string("output_dir", "runs/" + scenario_name(cfg.scenario));

  cfg.spin.d_zfs_mhz = kv.get_double("spin.d_zfs_mhz", constants::d_zfs_reference);
  const double b_z = kv.get_double("spin.b_z_mt", 50.0);
  cfg.spin.b_field_mt = {0.0, 0.0, b_z};
  cfg.spin.delta_d_khz = kv.get_double("spin.delta_d_khz", 0.0);

  cfg.readout.counts_bright = kv.get_double("readout.counts_bright", 0.03);
  cfg.readout.counts_dark = kv.get_double("readout.counts_dark", 0.021);
  cfg.readout.readouts_per_point =
      static_cast<long>(kv.get_int("readout.readouts_per_point", 100000));
  cfg.readout.sequence_overhead_us = kv.get_double("readout.sequence_overhead_us", 1.3);

  cfg.calibration.c_t_khz_per_k =
      kv.get_double("calibration.c_t_khz_per_k", constants::c_t_ambient);
  cfg.calibration.d_ref_mhz = kv.get_double("calibration.d_ref_mhz", constants::d_zfs_reference);
  cfg.calibration.t_ref_k = kv.get_double("calibration.t_ref_k", 295.0);
  cfg.calibration.laser_heating_mk = kv.get_double("calibration.laser_heating_mk", 3.0);
  cfg.calibration.microwave_heating_mk = kv.get_double("calibration.microwave_heating_mk", 0.0);

  if (kv.has("bath.concentration")) {
    BathConfig bc;
    bc.concentration = kv.get_double("bath.concentration", 0.011);
    bc.cutoff_radius_nm = kv.get_double("bath.cutoff_radius_nm", 3.0);
    bc.exclusion_radius_nm = kv.get_double("bath.exclusion_radius_nm", 0.25);
    bc.max_expected_spins =
        static_cast<std::size_t>(kv.get_int("bath.max_expected_spins", 4000));
    bc.b_z_mt = b_z;
    bc.seed = cfg.master_seed;
    cfg.bath = bc;
  }

  try {
    cfg.spin.validate();
    cfg.readout.validate();
    cfg.calibration.validate();
    if (cfg.bath) cfg.bath->validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config schema violations:\n  ") + e.what());
  }
  return cfg;
}

struct RunResult {
  std::string output_dir;
  std::vector<std::string> data_files;
  std::string summary_path;
  std::vector<std::string> summary_lines;
};

namespace detail {

class RunWriter {
 public:
  RunWriter(const ScenarioConfig& cfg, bool force) : cfg_(cfg) {
    namespace fs = std::filesystem;
    dir_ = cfg.output_dir;
    const fs::path summary = fs::path(dir_) / "summary.txt";
    if (fs::exists(summary) && !force)
      throw ConfigError("output_dir: completed run exists at " + dir_ +
                        " (use --force to overwrite)");
    fs::create_directories(dir_);
    // mark in progress; cleared when the summary lands
    std::ofstream(fs::path(dir_) / "INCOMPLETE") << "run in progress\n";
    result_.output_dir = dir_;
  }

  std::string provenance() const {
    return "# config_digest " + cfg_.raw.digest_hex() + "\n# master_seed " +
           std::to_string(cfg_.master_seed) + "\n";
  }

  void write_table(const std::string& name, const std::vector<std::string>& columns,
                   const std::vector<std::vector<double>>& rows) {
    namespace fs = std::filesystem;
    const fs::path path = fs::path(dir_) / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << provenance();
    for (std::size_t c = 0; c < columns.size(); ++c)
      out << (c ? "\t" : "") << columns[c];
    out << "\n";
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c)
        out << (c ? "\t" : "") << format_num(row[c]);
      out << "\n";
    }
    result_.data_files.push_back(path.string());
  }

  void summary_line(const std::string& line) { result_.summary_lines.push_back(line); }

  RunResult finish() {
    namespace fs = std::filesystem;
    const fs::path summary = fs::path(dir_) / "summary.txt";
    std::ofstream out(summary);
    out << provenance();
    out << "scenario " << scenario_name(cfg_.scenario) << "\n";
    for (const auto& line : result_.summary_lines) out << line << "\n";
    out.close();
    fs::remove(fs::path(dir_) / "INCOMPLETE");
    result_.summary_path = summary.string();
    return result_;
  }

 private:
  const ScenarioConfig& cfg_;
  std::string dir_;
  RunResult result_;
};

// ---------- decay_study ----------

inline RunResult run_decay_study(const ScenarioConfig& cfg, int workers, bool force) {
  const auto& kv = cfg.raw;
  const std::vector<double> conc =
      kv.get_double_list("decay_study.concentrations", {0.01, 0.01, 1e-5});
  const std::vector<double> b_fields =
      kv.get_double_list("decay_study.b_fields_mt", {5.0, 50.0, 50.0});
  if (conc.size() != b_fields.size())
    throw ConfigError("decay_study.b_fields_mt: length differs from decay_study.concentrations");
  const int seeds = static_cast<int>(kv.get_int("decay_study.seeds", 20));
  if (seeds < 1) throw ConfigError("decay_study.seeds: must be >= 1");
  const double tau_min = kv.get_double("decay_study.tau_min_us", 2.0);
  const double tau_max = kv.get_double("decay_study.tau_max_us", 4000.0);
  const int tau_points = static_cast<int>(kv.get_int("decay_study.tau_points", 48));
  CceOptions cce_opt;
  cce_opt.min_pair_phase_rad = kv.get_double("decay_study.min_pair_phase_rad", 0.0);
  cce_opt.pair_separation_cutoff_nm = kv.get_double(
      "decay_study.pair_separation_cutoff_nm", std::numeric_limits<double>::infinity());

  const std::vector<double> grid = log_tau_grid(tau_min, tau_max, tau_points);
  const std::size_t n_settings = conc.size();
  const std::size_t n_tasks = n_settings * static_cast<std::size_t>(seeds);

  struct Task {
    std::vector<double> l;
    double t_d_us = 0;
  };
  const PulseSequence proto = d_ramsey_sequence(1.0);

  std::function<Task(std::size_t)> job = [&](std::size_t k) {
    const std::size_t setting = k / static_cast<std::size_t>(seeds);
    BathConfig bc = cfg.bath.value_or(BathConfig{});
    bc.concentration = conc[setting];
    bc.b_z_mt = b_fields[setting];
    if (!cfg.raw.has("bath.cutoff_radius_nm")) bc.cutoff_radius_nm = 3.0;
    bc.seed = task_seed(cfg.master_seed, k);

    SpinSystemSpec spec = cfg.spin;
    spec.b_field_mt = {0.0, 0.0, b_fields[setting]};

    const std::vector<BathSpin> bath = sample_bath(bc);
    const CoherenceCurve curve = cce_coherence(spec, bath, proto, grid, cce_opt);
    Task t;
    t.l = curve.l_values;
    t.t_d_us = estimate_t_d(curve, true).t_d_us;
    return t;
  };
  const std::vector<Task> tasks = parallel_map<Task>(n_tasks, workers, job);

  RunWriter writer(cfg, force);
  std::vector<double> median_t_d(n_settings);
  for (std::size_t s = 0; s < n_settings; ++s) {
    std::vector<std::string> cols = {"tau_us"};
    for (int r = 0; r < seeds; ++r) cols.push_back("l_seed" + std::to_string(r));
    cols.push_back("l_median");
    std::vector<std::vector<double>> rows(grid.size());
    for (std::size_t t = 0; t < grid.size(); ++t) {
      rows[t].push_back(grid[t]);
      std::vector<double> per_seed;
      for (int r = 0; r < seeds; ++r) {
        const double l = tasks[s * seeds + static_cast<std::size_t>(r)].l[t];
        rows[t].push_back(l);
        per_seed.push_back(l);
      }
      rows[t].push_back(median(per_seed));
    }
    std::ostringstream name;
    name << "decay_c" << format_num(conc[s]) << "_b" << format_num(b_fields[s]) << "mT.tsv";
    writer.write_table(name.str(), cols, rows);

    std::vector<double> t_ds;
    for (int r = 0; r < seeds; ++r) t_ds.push_back(tasks[s * seeds + r].t_d_us);
    median_t_d[s] = median(t_ds);
    writer.summary_line("t_d_median_us c=" + format_num(conc[s]) + " b_z=" +
                        format_num(b_fields[s]) + "mT " + format_num(median_t_d[s]));
  }
  bool ordered = true;
  for (std::size_t s = 1; s < n_settings; ++s)
    if (!(median_t_d[s - 1] < median_t_d[s])) ordered = false;
  writer.summary_line(std::string("t_d_ordering ") + (ordered ? "increasing" : "violated"));
  return writer.finish();
}

// ---------- calibration_sweep ----------

struct CalibrationFit {
  double slope_khz_per_k = 0;
  double slope_sigma_khz_per_k = 0;
  double intercept_khz = 0;
  double intercept_sigma_khz = 0;
};

// weighted linear regression y = a + b (x - x_ref)
inline CalibrationFit weighted_line_fit(const std::vector<double>& x,
                                        const std::vector<double>& y,
                                        const std::vector<double>& sigma, double x_ref) {
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double s = sigma[k] > 0 ? sigma[k] : 1.0;
    const double w = 1.0 / (s * s);
    const double xc = x[k] - x_ref;
    sw += w;
    swx += w * xc;
    swy += w * y[k];
    swxx += w * xc * xc;
    swxy += w * xc * y[k];
  }
  const double det = sw * swxx - swx * swx;
  if (det <= 0) throw std::runtime_error("line fit: degenerate abscissa");
  CalibrationFit fit;
  fit.intercept_khz = (swxx * swy - swx * swxy) / det;
  fit.slope_khz_per_k = (sw * swxy - swx * swy) / det;
  fit.intercept_sigma_khz = std::sqrt(swxx / det);
  fit.slope_sigma_khz_per_k = std::sqrt(sw / det);
  return fit;
}

inline RunResult run_calibration_sweep(const ScenarioConfig& cfg, int workers, bool force) {
  const auto& kv = cfg.raw;
  // keep |c_T (T - T_ref)| below the base fringe offset: the fringe
  // frequency is |Delta D|, so the sweep must not push it through zero
  std::vector<double> temps_default;
  for (int k = 0; k < 10; ++k) temps_default.push_back(294.6 + 0.8 * k / 9.0);
  const std::vector<double> temps =
      kv.get_double_list("calibration_sweep.temperatures_k", temps_default);
  if (temps.size() < 3)
    throw ConfigError("calibration_sweep.temperatures_k: insufficient data, need >= 3 points");
  const bool noise = kv.get_bool("calibration_sweep.noise", true);
  const double t_d = kv.get_double("calibration_sweep.t_d_us", 829.0);
  const double stretch = kv.get_double("calibration_sweep.stretch", 1.0);
  const double tau_max = kv.get_double("calibration_sweep.tau_max_us", 400.0);
  const int tau_points = static_cast<int>(kv.get_int("calibration_sweep.tau_points", 100));
  const double base_offset = kv.get_double("calibration_sweep.base_offset_khz", 60.0);
  const double truth_slope = cfg.calibration.c_t_khz_per_k;
  const double t_ref = cfg.calibration.t_ref_k;

  std::vector<double> tau(static_cast<std::size_t>(tau_points));
  for (int k = 0; k < tau_points; ++k)
    tau[static_cast<std::size_t>(k)] = tau_max * (k + 1) / static_cast<double>(tau_points);

  struct Point {
    double dd_true = 0, dd_hat = 0, sigma = 0;
  };
  std::function<Point(std::size_t)> job = [&](std::size_t k) {
    const double dd_true = truth_slope * (temps[k] - t_ref);
    EvolutionContext ctx;
    ctx.spec = cfg.spin;
    ctx.delta_d_khz = base_offset + dd_true;
    const SignalTrace tr = simulate_d_ramsey_trace(ctx, tau, t_d, stretch, cfg.readout,
                                                   task_seed(cfg.master_seed, k), noise);
    const FringeFit fit = fit_fringe(tr);
    Point p;
    p.dd_true = dd_true;
    p.dd_hat = fit.frequency_khz - base_offset;
    p.sigma = noise ? fit.frequency_sigma_khz : 1.0;
    return p;
  };
  const std::vector<Point> pts = parallel_map<Point>(temps.size(), workers, job);

  std::vector<double> y, s;
  for (const auto& p : pts) {
    y.push_back(p.dd_hat);
    s.push_back(p.sigma);
  }
  const CalibrationFit fit = weighted_line_fit(temps, y, s, t_ref);

  RunWriter writer(cfg, force);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < temps.size(); ++k)
    rows.push_back({temps[k], pts[k].dd_true, pts[k].dd_hat, pts[k].sigma});
  writer.write_table("calibration.tsv",
                     {"temp_k", "delta_d_true_khz", "delta_d_hat_khz", "sigma_khz"}, rows);
  writer.summary_line("c_t_khz_per_k " + format_num(fit.slope_khz_per_k) + " +- " +
                      format_num(fit.slope_sigma_khz_per_k));
  writer.summary_line("intercept_khz " + format_num(fit.intercept_khz) + " +- " +
                      format_num(fit.intercept_sigma_khz));
  writer.summary_line("truth_slope_khz_per_k " + format_num(truth_slope));
  writer.summary_line("slope_pull_sigma " +
                      format_num((fit.slope_khz_per_k - truth_slope) /
                                 std::max(fit.slope_sigma_khz_per_k, 1e-300)));
  return writer.finish();
}

// ---------- drift_track ----------

inline RunResult run_drift_track(const ScenarioConfig& cfg, int workers, bool force) {
  const auto& kv = cfg.raw;
  const int n_points = static_cast<int>(kv.get_int("drift_track.n_points", 24));
  if (n_points < 2) throw ConfigError("drift_track.n_points: must be >= 2");
  const double interval_s = kv.get_double("drift_track.interval_s", 600.0);
  const double amplitude_mk = kv.get_double("drift_track.drift_amplitude_mk", 0.0);
  const double period_s =
      kv.get_double("drift_track.drift_period_s", n_points * interval_s);
  const double t_d = kv.get_double("drift_track.t_d_us", 829.0);
  const double stretch = kv.get_double("drift_track.stretch", 1.0);
  const double tau_max = kv.get_double("drift_track.tau_max_us", 400.0);
  const int tau_points = static_cast<int>(kv.get_int("drift_track.tau_points", 100));
  const double base_offset = kv.get_double("drift_track.base_offset_khz", 60.0);

  std::vector<double> tau(static_cast<std::size_t>(tau_points));
  for (int k = 0; k < tau_points; ++k)
    tau[static_cast<std::size_t>(k)] = tau_max * (k + 1) / static_cast<double>(tau_points);

  std::function<TimedTrace(std::size_t)> job = [&](std::size_t k) {
    const double t_s = interval_s * static_cast<double>(k);
    const double temp_mk = amplitude_mk * std::sin(two_pi * t_s / period_s);
    EvolutionContext ctx;
    ctx.spec = cfg.spin;
    ctx.delta_d_khz = base_offset + 1e-3 * temp_mk * cfg.calibration.c_t_khz_per_k;
    TimedTrace tt;
    tt.timestamp_s = t_s;
    tt.trace = simulate_d_ramsey_trace(ctx, tau, t_d, stretch, cfg.readout,
                                       task_seed(cfg.master_seed, k));
    return tt;
  };
  const std::vector<TimedTrace> series =
      parallel_map<TimedTrace>(static_cast<std::size_t>(n_points), workers, job);

  // reference = injected truth, converted exactly as the tracker converts
  std::vector<ReferenceSample> reference;
  for (int k = 0; k < n_points; ++k) {
    const double t_s = interval_s * k;
    const double temp_mk = amplitude_mk * std::sin(two_pi * t_s / period_s);
    const double dd = base_offset + 1e-3 * temp_mk * cfg.calibration.c_t_khz_per_k;
    reference.push_back({t_s, delta_d_to_temperature(dd, cfg.calibration)});
  }

  const DriftResult res = track_drift(series, cfg.calibration, reference);

  RunWriter writer(cfg, force);
  std::vector<std::vector<double>> rows;
  std::size_t res_idx = 0;
  for (std::size_t k = 0; k < res.points.size(); ++k) {
    const auto& p = res.points[k];
    const double residual =
        p.fit_ok ? res.residuals_mk[res_idx++] : std::numeric_limits<double>::quiet_NaN();
    rows.push_back({p.timestamp_s, p.d_mhz, p.temperature_k, p.temperature_sigma_mk,
                    residual, p.fit_ok ? 1.0 : 0.0});
  }
  writer.write_table(
      "drift.tsv",
      {"timestamp_s", "d_mhz", "temp_k", "sigma_mk", "residual_mk", "fit_ok"}, rows);
  writer.summary_line("residual_std_mk " + format_num(res.residual_std_mk));
  writer.summary_line("mean_sigma_mk " + format_num(res.mean_sigma_mk));
  writer.summary_line("std_over_sigma " +
                      format_num(res.residual_std_mk / std::max(res.mean_sigma_mk, 1e-300)));
  return writer.finish();
}

// ---------- sensitivity_sweep ----------

inline RunResult run_sensitivity_sweep(const ScenarioConfig& cfg, int workers, bool force) {
  const auto& kv = cfg.raw;
  const std::vector<double> tau_max_list =
      kv.get_double_list("sensitivity_sweep.tau_max_list_us", {100.0, 200.0, 400.0, 800.0});
  const int reps = static_cast<int>(kv.get_int("sensitivity_sweep.reps", 40));
  if (reps < 2) throw ConfigError("sensitivity_sweep.reps: must be >= 2");
  const int tau_points = static_cast<int>(kv.get_int("sensitivity_sweep.tau_points", 100));
  const double t_d = kv.get_double("sensitivity_sweep.t_d_us", 1e6);
  const double dd = kv.get_double("sensitivity_sweep.delta_d_khz", 50.0);

  // photon budget per trace is fixed: same points x readouts at every tau_max
  struct Task {
    double f = 0, sigma = 0;
  };
  const std::size_t n_tasks = tau_max_list.size() * static_cast<std::size_t>(reps);
  std::function<Task(std::size_t)> job = [&](std::size_t k) {
    const std::size_t ti = k / static_cast<std::size_t>(reps);
    std::vector<double> tau(static_cast<std::size_t>(tau_points));
    for (int j = 0; j < tau_points; ++j)
      tau[static_cast<std::size_t>(j)] =
          tau_max_list[ti] * (j + 1) / static_cast<double>(tau_points);
    EvolutionContext ctx;
    ctx.spec = cfg.spin;
    ctx.delta_d_khz = dd;
    const SignalTrace tr = simulate_d_ramsey_trace(ctx, tau, t_d, 1.0, cfg.readout,
                                                   task_seed(cfg.master_seed, k));
    const FringeFit fit = fit_fringe(tr);
    return Task{fit.frequency_khz, fit.frequency_sigma_khz};
  };
  const std::vector<Task> tasks = parallel_map<Task>(n_tasks, workers, job);

  RunWriter writer(cfg, force);
  std::vector<std::vector<double>> rows;
  for (std::size_t ti = 0; ti < tau_max_list.size(); ++ti) {
    double sum = 0, sum2 = 0, sig = 0;
    for (int r = 0; r < reps; ++r) {
      const Task& t = tasks[ti * reps + static_cast<std::size_t>(r)];
      sum += t.f;
      sum2 += t.f * t.f;
      sig += t.sigma;
    }
    const double mean = sum / reps;
    const double sd = std::sqrt(std::max(0.0, (sum2 - reps * mean * mean) / (reps - 1)));
    const double reported = sig / reps;
    rows.push_back({tau_max_list[ti], mean, sd, reported, sd * tau_max_list[ti]});

    // per-trace wall time: shots x (accumulation + overhead), summed over points
    double time_us = 0;
    for (int j = 0; j < tau_points; ++j)
      time_us += static_cast<double>(cfg.readout.readouts_per_point) *
                 (tau_max_list[ti] * (j + 1) / tau_points + cfg.readout.sequence_overhead_us);
    const SensitivityReport rep = sensitivity_report(sd, 1e-6 * time_us, cfg.calibration);
    writer.summary_line("tau_max_us " + format_num(tau_max_list[ti]) + " sigma_f_khz " +
                        format_num(sd) + " n_t_mk_sqrt_hz " +
                        format_num(rep.noise_floor_mk_sqrt_hz));
  }
  writer.write_table("sensitivity.tsv",
                     {"tau_max_us", "f_mean_khz", "sigma_f_empirical_khz",
                      "sigma_f_reported_khz", "sigma_times_tau"},
                     rows);
  return writer.finish();
}

// ---------- heat_profile ----------

inline RunResult run_heat_profile(const ScenarioConfig& cfg, int workers, bool force) {
  const auto& kv = cfg.raw;
  const std::vector<double> distances =
      kv.get_double_list("heat_profile.distances_um", {1.0, 2.0, 4.0, 8.0, 16.0, 32.0});
  HeatSourceModel model;
  model.source_power_k_um = kv.get_double("heat_profile.source_power_k_um", 1.0);
  model.ambient_k = kv.get_double("heat_profile.ambient_k", cfg.calibration.t_ref_k);
  model.min_standoff_um = kv.get_double("heat_profile.min_standoff_um", 0.1);
  for (double d : distances) {
    model.positions_um.push_back({d, 0.0});
    if (d < model.min_standoff_um)
      throw ConfigError("heat_profile.distances_um: distance " + format_num(d) +
                        " below minimum standoff " + format_num(model.min_standoff_um));
  }
  // nanodiamond regime: short T_D, fixed-tau phase readout on the fringe slope
  const double t_d = kv.get_double("heat_profile.t_d_us", 3.0);
  // keep the accumulated phase within the invertible slope region
  const double tau_op = kv.get_double("heat_profile.tau_op_us", 0.5);
  const double stretch = kv.get_double("heat_profile.stretch", 1.0);
  const double c_t = cfg.calibration.c_t_khz_per_k;

  struct Point {
    double dt_true = 0, dt_hat = 0, sigma = 0;
  };
  std::function<Point(std::size_t)> job = [&](std::size_t k) {
    const double dt_true = model.delta_t_k(distances[k]);
    const double dd_khz = c_t * dt_true;  // offset from the ambient operating point
    const double env = std::exp(-std::pow(tau_op / t_d, stretch));
    const double s = 0.5 - 0.5 * env * std::sin(two_pi * 1e-3 * dd_khz * tau_op);
    const long counts = sample_counts(s, cfg.readout, task_seed(cfg.master_seed, k));
    const double span = static_cast<double>(cfg.readout.readouts_per_point) *
                        (cfg.readout.counts_bright - cfg.readout.counts_dark);
    const double base =
        static_cast<double>(cfg.readout.readouts_per_point) * cfg.readout.counts_dark;
    const double s_hat = (static_cast<double>(counts) - base) / span;
    const double s_sigma = std::sqrt(cfg.readout.mean_counts(s)) / span;
    const PhaseReadout pr = phase_readout_delta_d(s_hat, s_sigma, tau_op, env, 0.0);
    Point p;
    p.dt_true = dt_true;
    p.dt_hat = pr.delta_d_khz / c_t;
    p.sigma = pr.delta_d_sigma_khz / std::abs(c_t);
    return p;
  };
  const std::vector<Point> pts = parallel_map<Point>(distances.size(), workers, job);

  RunWriter writer(cfg, force);
  std::vector<std::vector<double>> rows;
  double worst_pull = 0;
  for (std::size_t k = 0; k < distances.size(); ++k) {
    rows.push_back({distances[k], pts[k].dt_true, pts[k].dt_hat, pts[k].sigma});
    worst_pull = std::max(worst_pull,
                          std::abs(pts[k].dt_hat - pts[k].dt_true) / pts[k].sigma);
  }
  writer.write_table("heat_profile.tsv",
                     {"distance_um", "dt_true_k", "dt_hat_k", "sigma_k"}, rows);
  writer.summary_line("source_power_k_um " + format_num(model.source_power_k_um));
  writer.summary_line("ambient_k " + format_num(model.ambient_k));
  writer.summary_line("worst_pull_sigma " + format_num(worst_pull));
  writer.summary_line("truth_model synthetic point_source_steady_state dt=A/d");
  return writer.finish();
}

}  // namespace detail

inline RunResult run_scenario(const ScenarioConfig& cfg, int workers = 1, bool force = false) {
  switch (cfg.scenario) {
    case Scenario::decay_study:
      return detail::run_decay_study(cfg, workers, force);
    case Scenario::calibration_sweep:
      return detail::run_calibration_sweep(cfg, workers, force);
    case Scenario::drift_track:
      return detail::run_drift_track(cfg, workers, force);
    case Scenario::sensitivity_sweep:
      return detail::run_sensitivity_sweep(cfg, workers, force);
    case Scenario::heat_profile:
      return detail::run_heat_profile(cfg, workers, force);
  }
  throw ConfigError("scenario: unknown scenario value");
}

}  // namespace nvtherm
