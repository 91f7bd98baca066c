#include "tlsnoise/cli.hpp"

#include "tlsnoise/classical_sr.hpp"
#include "tlsnoise/parallel.hpp"
#include "tlsnoise/version.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace tlsnoise::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::vector<std::string> preset_names() {
  return {"fig2a", "fig2b", "fig3", "fig4", "fig5a", "fig5b", "fig6a", "fig6b", "fig7"};
}

namespace {

// Detailed balance at a temperature far above every rate; lambda is then
// negligible, as for the paper's 0.1 K bath.
constexpr double preset_theta = 1e4;

RunConfig preset_base(const std::string& name) {
  RunConfig c;
  c.preset = name;
  c.output_dir = "out/" + name;
  c.tls.gamma_total = 1.0;
  c.tls.eta = 1.0;
  c.tls.theta = preset_theta;
  c.simulation = {1e4, 100.0, "ground", "bloch"};
  for (const auto& m : default_1f_ensemble().members) {
    TlsConfig t;
    t.gamma_total = m.gamma_total();
    t.eta = m.eta;
    c.ensemble.members.push_back(t);
  }
  c.ensemble.gamma_mid = 1e-3;
  c.sweep.axis1 = log_axis(SweepAxis::alpha_z, 1e-2, 1e4, 7);
  c.sweep.axis2 = log_axis(SweepAxis::omega_d, 1e-2, 1e4, 7);
  c.sweep.alpha_x_ratio = 0.5;
  return c;
}

DriveParams half_x(double alpha_z, double omega_d) { return {alpha_z, 0.5 * alpha_z, omega_d}; }

}  // namespace

RunConfig figure_preset(const std::string& name) {
  RunConfig c = preset_base(name);
  if (name == "fig2a") {
    c.mode = Mode::psd;
    c.drives = {half_x(1e2, 10.0), half_x(1e3, 10.0), half_x(1e4, 10.0)};
    c.note = "driven PSDs for alpha_z = 1e2, 1e3, 1e4 at omega_d = 10";
  } else if (name == "fig2b") {
    c.mode = Mode::psd;
    c.drives = {half_x(1e4, 10.0), half_x(1e4, 100.0), half_x(1e4, 1000.0)};
    c.note = "driven PSDs for omega_d = 10, 100, 1000 at alpha_z = 1e4; the published "
             "two-decade display offsets are not applied to the data";
  } else if (name == "fig3") {
    c.mode = Mode::grid;
    c.note = "single-TLS enhancement grid";
  } else if (name == "fig4") {
    c.mode = Mode::eta_scan;
    c.drives = {{100.0, 100.0, 10.0}};
    c.sweep.etas = {1.0, 10.0, 100.0, 1e3, 1e4};
    c.note = "PSD against eta at alpha_z = alpha_x = 100, omega_d = 10";
  } else if (name == "fig5a") {
    c.mode = Mode::grid;
    c.tls.epsilon = 0.1;
    c.note = "single-TLS enhancement grid at epsilon = 0.1";
  } else if (name == "fig5b") {
    c.mode = Mode::grid;
    c.tls.epsilon = 10.0;
    c.note = "single-TLS enhancement grid at epsilon = 10";
  } else if (name == "fig6a") {
    c.mode = Mode::ensemble;
    c.drives = {half_x(1e3, 0.1)};
    c.note = "seven-TLS ensemble driven in band (omega_d = 0.1)";
  } else if (name == "fig6b") {
    c.mode = Mode::ensemble;
    c.drives = {half_x(1e3, 100.0)};
    c.note = "seven-TLS ensemble driven out of band (omega_d = 100)";
  } else if (name == "fig7") {
    c.mode = Mode::grid;
    c.sweep.base = "ensemble";
    c.note = "seven-TLS ensemble enhancement grid";
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoFailure*>(&e)) return io_failure;
  if (dynamic_cast<const ConfigError*>(&e)) return config_invalid;
  if (dynamic_cast<const InvalidParameter*>(&e) || dynamic_cast<const InvalidInput*>(&e)) {
    return config_invalid;
  }
  return numerical_failure;
}

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoFailure("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoFailure("cannot move " + tmp.string() + " to " + path.string());
  }
}

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

using Clock = std::chrono::steady_clock;

// Per-run state: output directory, written files, stage timings, results.
class Run {
 public:
  Run(const RunConfig& cfg, std::ostream& log) : cfg_(cfg), log_(log), dir_(cfg.output_dir) {}

  const RunConfig& cfg() const { return cfg_; }
  std::ostream& log() { return log_; }
  json& results() { return results_; }
  json& resolved() { return resolved_; }
  const std::vector<fs::path>& files() const { return files_; }

  void prepare() {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoFailure("cannot create output directory " + dir_.string());
  }

  void write(const std::string& name, const std::string& text) {
    write_atomic(dir_ / name, text);
    files_.push_back(dir_ / name);
    log_ << "  wrote " << (dir_ / name).string() << '\n';
  }

  template <typename Fn>
  auto timed(const std::string& stage, Fn&& fn) {
    const auto t0 = Clock::now();
    struct Record {
      json& timings;
      std::string stage;
      Clock::time_point t0;
      ~Record() {
        timings[stage] = std::chrono::duration<double>(Clock::now() - t0).count();
      }
    } record{timings_, stage, t0};
    return fn();
  }

  void finish(int code, const std::string& message, double total_seconds) {
    json m;
    m["manifest_version"] = 1;
    m["tool"] = "tlsnoise";
    m["version"] = version();
    m["status"] = code == ok ? "ok" : "failed";
    m["exit_code"] = code;
    m["message"] = message;
    m["config"] = json::parse(serialize(cfg_));
    m["resolved"] = resolved_;
    m["results"] = results_;
    json names = json::array();
    for (const auto& f : files_) names.push_back(f.filename().string());
    names.push_back("config.json");
    m["files"] = names;
    timings_["total"] = total_seconds;
    m["timings_s"] = timings_;
    write_atomic(dir_ / "config.json", serialize(cfg_));
    write_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
    files_.push_back(dir_ / "config.json");
    files_.push_back(dir_ / "manifest.json");
  }

 private:
  const RunConfig& cfg_;
  std::ostream& log_;
  fs::path dir_;
  std::vector<fs::path> files_;
  json results_ = json::object();
  json resolved_ = json::object();
  json timings_ = json::object();
};

json tls_resolved(const TlsParams& p) {
  return json{{"epsilon", p.epsilon},           {"delta", p.delta},
              {"gamma_relax", p.gamma_relax},   {"kappa_excite", p.kappa_excite},
              {"eta", p.eta},                   {"gamma_total", p.gamma_total()},
              {"lambda", p.lambda()}};
}

std::string drive_label(const DriveParams& d) {
  return "alpha_z=" + sci(d.alpha_z) + " alpha_x=" + sci(d.alpha_x) + " omega_d=" + sci(d.omega_d);
}

std::string spectrum_text(const Spectrum& s, const std::string& comment) {
  std::ostringstream os;
  os << "# " << comment << '\n';
  write_csv(os, s);
  return os.str();
}

std::string grid_text(const SweepResult& r) {
  std::ostringstream os;
  write_csv(os, r);
  return os.str();
}

TimeSeries propagate(const RunConfig& cfg, const TlsParams& p, const DriveParams& d) {
  const BlochState init =
      cfg.simulation.initial_state == "excited" ? BlochState::excited() : BlochState::ground();
  if (cfg.simulation.propagator == "density_matrix") {
    return integrate_full_density_matrix(p, d, init, cfg.simulation.fs, cfg.simulation.t_max);
  }
  return integrate(p, d, init, cfg.simulation.fs, cfg.simulation.t_max);
}

PsdOptions psd_options(const RunConfig& cfg, const TlsParams& p, Normalization norm,
                       double scale) {
  PsdOptions o;
  o.estimator = cfg.psd.estimator;
  o.welch_segments = cfg.psd.welch_segments;
  o.welch_overlap = cfg.psd.welch_overlap;
  o.normalization = norm;
  o.reference_scale = scale;
  o.subtract_tail_mean = p.lambda() != 0.0;
  return o;
}

std::vector<DriveParams> drives_or_undriven(const RunConfig& cfg) {
  if (cfg.drives.empty()) return {DriveParams{}};
  return cfg.drives;
}

void run_simulate(Run& run) {
  const RunConfig& cfg = run.cfg();
  const TlsParams p = resolved_tls(cfg);
  run.resolved()["tls"] = tls_resolved(p);
  const auto drives = drives_or_undriven(cfg);
  json rows = json::array();
  for (std::size_t k = 0; k < drives.size(); ++k) {
    const TimeSeries ts = run.timed("trajectory_" + std::to_string(k),
                                    [&] { return propagate(cfg, p, drives[k]); });
    std::ostringstream os;
    os << "# " << drive_label(drives[k]) << " propagator=" << cfg.simulation.propagator
       << " initial_state=" << ts.initial_state << " fs=" << sci(ts.fs)
       << " t_max=" << sci(ts.t_max) << '\n';
    os << "t,s_z\n";
    for (Eigen::Index i = 0; i < ts.size(); ++i) {
      os << sci(ts.time(i)) << ',' << sci(ts.values(i)) << '\n';
    }
    run.write("trajectory_" + std::to_string(k) + ".csv", os.str());
    rows.push_back({{"drive", drive_label(drives[k])},
                    {"samples", ts.size()},
                    {"final_s_z", ts.values(ts.size() - 1)}});
  }
  run.results()["trajectories"] = rows;
}

// Shared by psd and tphi: undriven baseline at unit weight, driven spectra on
// the baseline's scale.
void run_single_spectra(Run& run, bool write_spectra) {
  const RunConfig& cfg = run.cfg();
  const TlsParams p = resolved_tls(cfg);
  run.resolved()["tls"] = tls_resolved(p);

  const Spectrum su = run.timed("undriven", [&] {
    return psd_from_timeseries(propagate(cfg, p, {}),
                               psd_options(cfg, p, Normalization::unit_weight, 1.0));
  });
  const TphiResult t0 = tphi_solve(su, cfg.dephasing);
  if (!t0.converged) throw NumericalFailure("undriven T_phi did not converge");
  const double cut = cfg.sweep.omega_cut > 0.0 ? cfg.sweep.omega_cut : 1.0 / t0.t_phi;
  if (write_spectra) run.write("spectrum_undriven.csv", spectrum_text(su, "undriven"));

  std::ostringstream table;
  table << "# tool=tlsnoise version=" << version() << " omega_cut=" << sci(cut) << '\n';
  table << "alpha_z,alpha_x,omega_d,norm_total,t_phi_0,t_phi_d,ratio,R_emp,converged\n";
  json rows = json::array();
  for (std::size_t k = 0; k < cfg.drives.size(); ++k) {
    const DriveParams& d = cfg.drives[k];
    const Spectrum sd = run.timed("driven_" + std::to_string(k), [&] {
      return psd_from_timeseries(propagate(cfg, p, d),
                                 psd_options(cfg, p, Normalization::reference, su.meta.scale));
    });
    const TphiResult td = tphi_solve(sd, cfg.dephasing);
    const double ratio = td.converged ? td.t_phi / t0.t_phi : std::nan("");
    const double r_emp = empirical_redistribution(sd, su, cut);
    table << sci(d.alpha_z) << ',' << sci(d.alpha_x) << ',' << sci(d.omega_d) << ','
          << sci(sd.norm_total()) << ',' << sci(t0.t_phi) << ',' << sci(td.t_phi) << ','
          << sci(ratio) << ',' << sci(r_emp) << ',' << (td.converged ? 1 : 0) << '\n';
    if (write_spectra) {
      run.write("spectrum_" + std::to_string(k) + ".csv", spectrum_text(sd, drive_label(d)));
    }
    rows.push_back({{"drive", drive_label(d)},
                    {"t_phi_d", td.t_phi},
                    {"ratio", ratio},
                    {"R_emp", r_emp},
                    {"norm_total", sd.norm_total()},
                    {"converged", td.converged}});
  }
  run.results()["t_phi_0"] = t0.t_phi;
  run.results()["undriven_norm_total"] = su.norm_total();
  run.results()["omega_cut"] = cut;
  run.results()["driven"] = rows;
  run.write(write_spectra ? "psd_summary.csv" : "tphi.csv", table.str());
}

json best_cell(const SweepResult& r) {
  const auto best = r.best();
  if (!best) return nullptr;
  const SweepRecord& c = r.cells[*best];
  return json{{"alpha_z", c.alpha_z}, {"omega_d", c.omega_d}, {"eta", c.eta},
              {"epsilon", c.epsilon}, {"ratio", c.ratio},     {"R_emp", c.r_emp}};
}

std::size_t failed_cells(const SweepResult& r) {
  std::size_t n = 0;
  for (const auto& c : r.cells) n += c.error.empty() ? 0 : 1;
  return n;
}

void run_grid_mode(Run& run) {
  const SweepPlan plan = resolved_plan(run.cfg());
  run.resolved()["plan"] = describe(plan);
  const SweepResult r = run.timed("grid", [&] { return run_grid(plan); });
  run.write("grid.csv", grid_text(r));
  run.results()["best"] = best_cell(r);
  run.results()["failed_cells"] = failed_cells(r);
}

void run_eta_mode(Run& run) {
  const RunConfig& cfg = run.cfg();
  const SweepPlan settings = resolved_plan(cfg);
  const TlsParams p = resolved_tls(cfg);
  run.resolved()["tls"] = tls_resolved(p);
  const SweepResult r = run.timed(
      "eta_scan", [&] { return run_eta_scan(p, cfg.drives.front(), cfg.sweep.etas, settings); });
  run.write("eta_scan.csv", grid_text(r));
  for (std::size_t k = 0; k < r.cells.size(); ++k) {
    const std::string eta = "eta=" + sci(r.cells[k].eta);
    if (r.cells[k].error.empty()) {
      run.write("spectrum_eta_" + std::to_string(k) + ".csv", spectrum_text(r.spectra[k], eta));
    }
    run.write("baseline_eta_" + std::to_string(k) + ".csv",
              spectrum_text(r.baselines[k], "undriven " + eta));
  }
  const std::size_t best = argmax_r(r);
  run.results()["argmax_eta"] = r.cells[best].eta;
  run.results()["max_R_emp"] = r.cells[best].r_emp;
  run.results()["failed_cells"] = failed_cells(r);
}

void run_epsilon_mode(Run& run) {
  const RunConfig& cfg = run.cfg();
  const SweepPlan plan = resolved_plan(cfg);
  run.resolved()["plan"] = describe(plan);
  const auto grids =
      run.timed("epsilon_scan", [&] { return run_epsilon_scan(plan, cfg.sweep.epsilons); });
  std::ostringstream peaks;
  peaks << "epsilon,omega_d,alpha_peak,prominence,interior\n";
  json rows = json::array();
  for (std::size_t k = 0; k < grids.size(); ++k) {
    run.write("grid_epsilon_" + std::to_string(k) + ".csv", grid_text(grids[k]));
    json row{{"epsilon", cfg.sweep.epsilons[k]}, {"best", best_cell(grids[k])}};
    if (plan.axis1.name == SweepAxis::alpha_z && plan.axis2.name == SweepAxis::omega_d) {
      const AlphaPeak peak = find_alpha_peak(grids[k]);
      peaks << sci(cfg.sweep.epsilons[k]) << ',' << sci(peak.omega_d) << ','
            << sci(peak.alpha_peak) << ',' << sci(peak.prominence) << ','
            << (peak.interior ? 1 : 0) << '\n';
      row["alpha_peak"] = peak.alpha_peak;
      row["interior"] = peak.interior;
    }
    rows.push_back(row);
  }
  if (plan.axis1.name == SweepAxis::alpha_z && plan.axis2.name == SweepAxis::omega_d) {
    run.write("alpha_peak.csv", peaks.str());
  }
  run.results()["epsilons"] = rows;
}

// Slope window: the central three decades of the member rates.
std::pair<double, double> central_decades(const EnsembleSpec& spec) {
  double lo = spec.members.front().gamma_total();
  double hi = lo;
  for (const auto& m : spec.members) {
    lo = std::min(lo, m.gamma_total());
    hi = std::max(hi, m.gamma_total());
  }
  const double mid = 0.5 * (std::log10(lo) + std::log10(hi));
  return {std::pow(10.0, mid - 1.5), std::pow(10.0, mid + 1.5)};
}

void run_ensemble_mode(Run& run) {
  const RunConfig& cfg = run.cfg();
  EnsembleSpec spec = resolved_ensemble(cfg);
  EnsembleOptions opts = cfg.ensemble.options;
  opts.threads = cfg.parallel;
  json members = json::array();
  for (const auto& m : spec.members) members.push_back(tls_resolved(m));
  run.resolved()["members"] = members;

  const EnsembleRun base = run.timed("undriven", [&] { return simulate_ensemble_members(spec, opts); });
  json windows = json::array();
  for (const auto& s : base.sampling) windows.push_back({{"fs", s.fs}, {"t_max", s.t_max}});
  run.resolved()["undriven_windows"] = windows;
  run.write("ensemble_undriven.csv", spectrum_text(base.aggregate, "undriven ensemble"));
  const TphiResult t0 = tphi_solve(base.aggregate, cfg.dephasing);
  if (!t0.converged) throw NumericalFailure("undriven ensemble T_phi did not converge");
  const auto [lo, hi] = central_decades(spec);
  run.results()["slope_band"] = {lo, hi};
  run.results()["slope"] = loglog_slope(base.aggregate, lo, hi);
  run.results()["norm_total"] = base.aggregate.norm_total();
  run.results()["t_phi_0"] = t0.t_phi;

  std::ostringstream table;
  table << "# tool=tlsnoise version=" << version() << " omega_cut=gamma_mid="
        << sci(spec.gamma_mid) << " mode=" << to_string(opts.mode) << '\n';
  table << "alpha_z,alpha_x,omega_d,norm_total,t_phi_0,t_phi_d,ratio,R_emp,converged\n";
  json rows = json::array();
  for (std::size_t k = 0; k < cfg.drives.size(); ++k) {
    spec.shared_drive = cfg.drives[k];
    const EnsembleRun d = run.timed("driven_" + std::to_string(k),
                                    [&] { return simulate_ensemble_members(spec, opts); });
    const TphiResult td = tphi_solve(d.aggregate, cfg.dephasing);
    const double ratio = td.converged ? td.t_phi / t0.t_phi : std::nan("");
    const double r_emp = empirical_redistribution(d.aggregate, base.aggregate, spec.gamma_mid);
    run.write("ensemble_driven_" + std::to_string(k) + ".csv",
              spectrum_text(d.aggregate, drive_label(cfg.drives[k])));
    table << sci(cfg.drives[k].alpha_z) << ',' << sci(cfg.drives[k].alpha_x) << ','
          << sci(cfg.drives[k].omega_d) << ',' << sci(d.aggregate.norm_total()) << ','
          << sci(t0.t_phi) << ',' << sci(td.t_phi) << ',' << sci(ratio) << ',' << sci(r_emp)
          << ',' << (td.converged ? 1 : 0) << '\n';
    rows.push_back({{"drive", drive_label(cfg.drives[k])},
                    {"t_phi_d", td.t_phi},
                    {"ratio", ratio},
                    {"R_emp", r_emp},
                    {"converged", td.converged}});
  }
  run.results()["driven"] = rows;
  run.write("ensemble_summary.csv", table.str());
}

// Mean telegraph spectrum over the configured seeds (the same seeds for every
// amplitude, so the comparison with the undriven run shares its noise).
Spectrum telegraph_mean(const ClassicalConfig& c, double amp) {
  const classical::ClassicalTls tls{c.w_total, c.dw, amp, c.drive_freq};
  PsdOptions o;
  o.estimator = Estimator::welch;
  o.welch_overlap = 0.0;
  o.welch_segments = std::max(1, static_cast<int>(std::floor(c.t_max / c.segment_length)));
  std::vector<Spectrum> v;
  v.reserve(static_cast<std::size_t>(c.seeds));
  for (int s = 0; s < c.seeds; ++s) {
    v.push_back(psd_from_timeseries(classical::telegraph_sample(tls, c.seed + s, c.fs, c.t_max), o));
  }
  return mean_spectrum(v);
}

int run_classical(Run& run) {
  const ClassicalConfig& c = run.cfg().classical;
  const Spectrum u = run.timed("undriven", [&] { return telegraph_mean(c, 0.0); });
  const classical::ClassicalTls base{c.w_total, c.dw, 0.0, c.drive_freq};

  std::ostringstream table;
  table << "# tool=tlsnoise version=" << version() << " seeds=" << c.seeds << " seed=" << c.seed
        << " fs=" << sci(c.fs) << " t_max=" << sci(c.t_max)
        << " segment_length=" << sci(c.segment_length) << " omega_cut=" << sci(c.omega_cut)
        << " tolerance=" << sci(c.tolerance) << '\n';
  table << "amp,R_analytic,R_emp,rel_err,status,message\n";
  std::vector<std::pair<double, Spectrum>> driven;
  json rows = json::array();
  int passed = 0;
  for (std::size_t k = 0; k < c.amps.size(); ++k) {
    const double a = c.amps[k];
    const classical::ClassicalTls tls{c.w_total, c.dw, a, c.drive_freq};
    const double r = classical::redistribution_ratio(tls).value;
    std::string status = "pass";
    std::string message;
    double r_emp = std::nan("");
    double rel = std::nan("");
    try {
      Spectrum d = run.timed("amp_" + std::to_string(k), [&] { return telegraph_mean(c, a); });
      r_emp = empirical_redistribution(d, u, c.omega_cut);
      rel = r > 0.0 ? r_emp / r - 1.0 : r_emp;
      if (!(std::abs(rel) <= c.tolerance)) status = "fail";
      driven.emplace_back(a, std::move(d));
    } catch (const InvalidParameter& e) {
      status = "invalid";
      message = e.what();
    }
    if (status == "pass") ++passed;
    std::string quoted = message;
    for (auto& ch : quoted) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    table << sci(a) << ',' << sci(r) << ',' << sci(r_emp) << ',' << sci(rel) << ',' << status
          << ',' << quoted << '\n';
    rows.push_back({{"amp", a},
                    {"R_analytic", r},
                    {"R_emp", r_emp},
                    {"rel_err", rel},
                    {"status", status},
                    {"message", message}});
  }
  run.write("classical_check.csv", table.str());

  std::ostringstream psd;
  psd << "# analytic weak-drive backgrounds against mean telegraph spectra\n";
  psd << "omega,lorentzian,telegraph_0";
  for (const auto& [a, s] : driven) psd << ",analytic_" << sci(a) << ",telegraph_" << sci(a);
  psd << '\n';
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double w = u.omega(i);
    psd << sci(w) << ',' << sci(classical::lorentzian_psd(base, w)) << ',' << sci(u.power(i));
    for (const auto& [a, s] : driven) {
      const classical::ClassicalTls tls{c.w_total, c.dw, a, c.drive_freq};
      const double bg = (1.0 - classical::redistribution_ratio(tls).value) *
                        classical::lorentzian_psd(tls, w);
      psd << ',' << sci(bg) << ',' << sci(s.power(i));
    }
    psd << '\n';
  }
  run.write("classical_psd.csv", psd.str());
  run.results()["undriven_norm_total"] = u.norm_total();
  run.results()["amplitudes"] = rows;
  run.results()["passed"] = passed;
  return passed == static_cast<int>(c.amps.size()) ? ok : numerical_failure;
}

}  // namespace

Outcome execute(const RunConfig& cfg, std::ostream& log) {
  Outcome out;
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    out.exit_code = config_invalid;
    out.message = e.what();
    return out;
  }

  Run run(cfg, log);
  const auto t0 = Clock::now();
  try {
    run.prepare();
  } catch (const std::exception& e) {
    out.exit_code = exit_code_for(e);
    out.message = e.what();
    return out;
  }
  log << "tlsnoise " << version() << ": mode " << to_string(cfg.mode) << " -> "
      << cfg.output_dir << '\n';
  try {
    switch (cfg.mode) {
      case Mode::simulate: run_simulate(run); break;
      case Mode::psd: run_single_spectra(run, true); break;
      case Mode::tphi: run_single_spectra(run, false); break;
      case Mode::grid: run_grid_mode(run); break;
      case Mode::eta_scan: run_eta_mode(run); break;
      case Mode::epsilon_scan: run_epsilon_mode(run); break;
      case Mode::ensemble: run_ensemble_mode(run); break;
      case Mode::classical_check:
        out.exit_code = run_classical(run);
        if (out.exit_code != ok) out.message = "classical-check: amplitudes outside tolerance";
        break;
    }
  } catch (const std::exception& e) {
    out.exit_code = exit_code_for(e);
    out.message = e.what();
  }
  try {
    run.finish(out.exit_code, out.message,
               std::chrono::duration<double>(Clock::now() - t0).count());
  } catch (const std::exception& e) {
    if (out.exit_code == ok) {
      out.exit_code = exit_code_for(e);
      out.message = e.what();
    }
  }
  out.files = run.files();
  return out;
}

}  // namespace tlsnoise::cli
