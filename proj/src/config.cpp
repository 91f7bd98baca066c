#include "tlsnoise/cli.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace tlsnoise::cli {

using json = nlohmann::ordered_json;

std::string to_string(Mode m) {
  switch (m) {
    case Mode::simulate: return "simulate";
    case Mode::psd: return "psd";
    case Mode::tphi: return "tphi";
    case Mode::grid: return "grid";
    case Mode::eta_scan: return "eta-scan";
    case Mode::epsilon_scan: return "epsilon-scan";
    case Mode::ensemble: return "ensemble";
    case Mode::classical_check: return "classical-check";
  }
  return "?";
}

Mode mode_from_string(const std::string& name) {
  for (Mode m : {Mode::simulate, Mode::psd, Mode::tphi, Mode::grid, Mode::eta_scan,
                 Mode::epsilon_scan, Mode::ensemble, Mode::classical_check}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown mode '" + name + "'");
}

TlsParams TlsConfig::resolve(std::optional<double> fallback_theta) const {
  if (lambda) return TlsParams::from_total(gamma_total, *lambda, eta, epsilon, delta);
  const auto t = theta ? theta : fallback_theta;
  if (t) return TlsParams::thermal(gamma_total, eta, epsilon, delta, *t);
  return TlsParams::from_total(gamma_total, 0.0, eta, epsilon, delta);
}

std::optional<double> RunConfig::physical_theta() const {
  if (!physical_units) return std::nullopt;
  return theta_from_physical(physical_units->temperature_k, physical_units->gamma_hz);
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

// Reads the keys of one JSON object and rejects any it was not asked about.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  // Accepts the key without reading it, so that an explicit null passes.
  void mark(const std::string& key) { seen_.insert(key); }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(path(key), "wrong type");
    }
  }

  void number(const std::string& key, double& out) {
    seen_.insert(key);
    if (!has(key)) return;
    if (!j_.at(key).is_number()) fail(path(key), "expected a number");
    out = j_.at(key).get<double>();
  }

  void integer(const std::string& key, int& out) {
    seen_.insert(key);
    if (!has(key)) return;
    if (!j_.at(key).is_number_integer()) fail(path(key), "expected an integer");
    out = j_.at(key).get<int>();
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    seen_.insert(key);
    if (!has(key)) {
      out.reset();
      return;
    }
    if (!j_.at(key).is_number()) fail(path(key), "expected a number or null");
    out = j_.at(key).get<double>();
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& a = j_.at(key);
    if (!a.is_array()) fail(path(key), "expected an array of numbers");
    out.clear();
    for (const auto& v : a) {
      if (!v.is_number()) fail(path(key), "expected an array of numbers");
      out.push_back(v.get<double>());
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(where_, "unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename Enum, typename Parse>
void enum_field(Reader& r, const std::string& key, Enum& out, Parse parse) {
  std::string name;
  r.get(key, name);
  if (name.empty()) return;
  try {
    out = parse(name);
  } catch (const Error& e) {
    fail(r.path(key), e.what());
  }
}

TlsConfig read_tls(const json& j, const std::string& where) {
  TlsConfig t;
  Reader r(j, where);
  r.number("epsilon", t.epsilon);
  r.number("delta", t.delta);
  r.number("gamma_total", t.gamma_total);
  r.number("eta", t.eta);
  r.optional_number("lambda", t.lambda);
  r.optional_number("theta", t.theta);
  r.finish();
  return t;
}

DriveParams read_drive(const json& j, const std::string& where) {
  DriveParams d;
  Reader r(j, where);
  r.number("alpha_z", d.alpha_z);
  r.number("alpha_x", d.alpha_x);
  r.number("omega_d", d.omega_d);
  r.finish();
  return d;
}

Axis read_axis(const json& j, const std::string& where) {
  Axis a;
  Reader r(j, where);
  enum_field(r, "name", a.name, sweep_axis_from_string);
  r.numbers("values", a.values);
  const bool range = r.has("lo") || r.has("hi") || r.has("n");
  double lo = 0.0, hi = 0.0;
  int n = 0;
  r.number("lo", lo);
  r.number("hi", hi);
  r.integer("n", n);
  r.finish();
  if (range) {
    if (!a.values.empty()) fail(where, "give either values or lo/hi/n, not both");
    if (!(lo > 0.0 && hi >= lo && n >= 1)) fail(where, "log range needs 0 < lo <= hi and n >= 1");
    a = log_axis(a.name, lo, hi, n);
  }
  return a;
}

json tls_json(const TlsConfig& t) {
  json j;
  j["epsilon"] = t.epsilon;
  j["delta"] = t.delta;
  j["gamma_total"] = t.gamma_total;
  j["eta"] = t.eta;
  j["lambda"] = t.lambda ? json(*t.lambda) : json(nullptr);
  j["theta"] = t.theta ? json(*t.theta) : json(nullptr);
  return j;
}

json drive_json(const DriveParams& d) {
  return json{{"alpha_z", d.alpha_z}, {"alpha_x", d.alpha_x}, {"omega_d", d.omega_d}};
}

json axis_json(const Axis& a) { return json{{"name", to_string(a.name)}, {"values", a.values}}; }

void check(bool cond, const std::string& where, const std::string& what) {
  if (!cond) fail(where, what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

void check_tls(const TlsConfig& t, std::optional<double> theta, const std::string& where) {
  check(!(t.lambda && t.theta), where, "give lambda or theta, not both");
  check(!t.theta || positive(*t.theta), where + ".theta", "must be > 0");
  try {
    t.resolve(theta).validate();
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

void check_window(double fs, double t_max, const std::string& where) {
  check(positive(fs) && positive(t_max), where, "fs and t_max must be > 0");
  try {
    sample_count(fs, t_max);
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  check(format_version == cli::format_version, "format_version",
        "unsupported version " + std::to_string(format_version));
  check(!output_dir.empty(), "output_dir", "must not be empty");
  check(parallel >= 0, "parallel", "must be >= 0");
  if (physical_units) {
    check(positive(physical_units->gamma_hz), "physical_units.gamma_hz", "must be > 0");
    check(positive(physical_units->temperature_k), "physical_units.temperature_k", "must be > 0");
  }
  const auto theta = physical_theta();
  for (std::size_t i = 0; i < drives.size(); ++i) {
    try {
      drives[i].validate();
    } catch (const Error& e) {
      fail("drives[" + std::to_string(i) + "]", e.what());
    }
  }
  try {
    dephasing.validate();
  } catch (const Error& e) {
    fail("dephasing", e.what());
  }

  const bool single_tls = mode == Mode::simulate || mode == Mode::psd || mode == Mode::tphi ||
                          mode == Mode::eta_scan || mode == Mode::epsilon_scan ||
                          (mode == Mode::grid && sweep.base == "tls");
  const bool uses_ensemble =
      mode == Mode::ensemble || (mode == Mode::grid && sweep.base == "ensemble");
  if (single_tls) {
    check_tls(tls, theta, "tls");
    check_window(simulation.fs, simulation.t_max, "simulation");
    check(simulation.initial_state == "ground" || simulation.initial_state == "excited",
          "simulation.initial_state", "must be 'ground' or 'excited'");
    check(simulation.propagator == "bloch" || simulation.propagator == "density_matrix",
          "simulation.propagator", "must be 'bloch' or 'density_matrix'");
  }
  if (mode == Mode::psd || mode == Mode::tphi) {
    check(psd.welch_segments >= 1, "psd.welch_segments", "must be >= 1");
    check(psd.welch_overlap >= 0.0 && psd.welch_overlap < 1.0, "psd.welch_overlap",
          "must lie in [0, 1)");
  }
  if (uses_ensemble) {
    check(!ensemble.members.empty(), "ensemble.members", "need at least one member");
    for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
      check_tls(ensemble.members[i], theta, "ensemble.members[" + std::to_string(i) + "]");
    }
    check(positive(ensemble.gamma_mid), "ensemble.gamma_mid", "must be > 0");
    const auto& o = ensemble.options;
    check(o.grid_per_decade >= 1, "ensemble.grid_per_decade", "must be >= 1");
    check(o.max_samples >= 16, "ensemble.max_samples", "must be >= 16");
    check(positive(o.relaxation_times) && positive(o.min_relaxation_times) &&
              positive(o.samples_per_rate) && positive(o.direct_step_budget),
          "ensemble", "window settings must be > 0");
    check(o.band_top >= 0.0, "ensemble.band_top", "must be >= 0");
    check_window(o.faithful_fs, o.faithful_t_max, "ensemble.faithful");
  }
  if (mode == Mode::grid || mode == Mode::epsilon_scan) {
    check(sweep.base == "tls" || sweep.base == "ensemble", "sweep.base",
          "must be 'tls' or 'ensemble'");
    check(!sweep.axis1.values.empty() && !sweep.axis2.values.empty(), "sweep",
          "both axes need values");
    check(sweep.axis1.name != sweep.axis2.name, "sweep", "axes must differ");
    check(std::isfinite(sweep.alpha_x_ratio) && sweep.alpha_x_ratio >= 0.0,
          "sweep.alpha_x_ratio", "must be >= 0");
    try {
      resolved_plan(*this).validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail("sweep", e.what());
    }
  }
  check(sweep.omega_cut >= 0.0, "sweep.omega_cut", "must be >= 0");
  if (mode == Mode::eta_scan) {
    check(drives.size() == 1, "drives", "eta-scan needs exactly one drive");
    check(!sweep.etas.empty(), "sweep.etas", "need at least one eta");
    for (double e : sweep.etas) check(positive(e), "sweep.etas", "values must be > 0");
  }
  if (mode == Mode::epsilon_scan) {
    check(sweep.base == "tls", "sweep.base", "epsilon-scan needs a single TLS");
    check(tls.delta == 0.0, "tls.delta", "epsilon-scan needs delta = 0");
    check(!sweep.epsilons.empty(), "sweep.epsilons", "need at least one epsilon");
  }
  if (mode == Mode::classical_check) {
    const auto& c = classical;
    check(positive(c.w_total), "classical.w_total", "must be > 0");
    check(std::abs(c.dw) <= c.w_total, "classical.dw", "|dw| must be <= w_total");
    check(positive(c.drive_freq), "classical.drive_freq", "must be > 0");
    check(!c.amps.empty(), "classical.amps", "need at least one amplitude");
    for (double a : c.amps) check(std::isfinite(a) && a >= 0.0, "classical.amps", "must be >= 0");
    check(c.seeds >= 1, "classical.seeds", "must be >= 1");
    check_window(c.fs, c.t_max, "classical");
    check(positive(c.segment_length) && c.segment_length <= c.t_max, "classical.segment_length",
          "must lie in (0, t_max]");
    check(positive(c.omega_cut), "classical.omega_cut", "must be > 0");
    check(positive(c.tolerance), "classical.tolerance", "must be > 0");
  }
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("manifest_version")) {
    if (!doc.contains("config")) fail("manifest", "has no embedded config");
    doc = json(doc.at("config"));
  }

  RunConfig c;
  Reader r(doc, "config");
  if (!r.has("format_version")) fail("config", "missing required key 'format_version'");
  if (!r.has("mode")) fail("config", "missing required key 'mode'");
  r.integer("format_version", c.format_version);
  enum_field(r, "mode", c.mode, mode_from_string);
  r.get("output_dir", c.output_dir);
  r.get("preset", c.preset);
  r.get("note", c.note);
  r.integer("parallel", c.parallel);

  if (r.has("tls")) c.tls = read_tls(r.raw("tls"), "tls");
  r.mark("tls");
  if (r.has("drives")) {
    const json& a = r.raw("drives");
    if (!a.is_array()) fail("drives", "expected an array");
    c.drives.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      c.drives.push_back(read_drive(a[i], "drives[" + std::to_string(i) + "]"));
    }
  }
  if (r.has("simulation")) {
    Reader s(r.raw("simulation"), "simulation");
    s.number("fs", c.simulation.fs);
    s.number("t_max", c.simulation.t_max);
    s.get("initial_state", c.simulation.initial_state);
    s.get("propagator", c.simulation.propagator);
    s.finish();
  }
  if (r.has("psd")) {
    Reader s(r.raw("psd"), "psd");
    enum_field(s, "estimator", c.psd.estimator, estimator_from_string);
    s.integer("welch_segments", c.psd.welch_segments);
    s.number("welch_overlap", c.psd.welch_overlap);
    s.finish();
  }
  if (r.has("dephasing")) {
    Reader s(r.raw("dephasing"), "dephasing");
    s.number("c0", c.dephasing.c0);
    enum_field(s, "window", c.dephasing.window, window_from_string);
    s.number("fixed_point_tol", c.dephasing.fixed_point_tol);
    s.integer("max_iter", c.dephasing.max_iter);
    s.finish();
  }
  if (r.has("sweep")) {
    Reader s(r.raw("sweep"), "sweep");
    s.get("base", c.sweep.base);
    if (s.has("axis1")) c.sweep.axis1 = read_axis(s.raw("axis1"), "sweep.axis1");
    if (s.has("axis2")) c.sweep.axis2 = read_axis(s.raw("axis2"), "sweep.axis2");
    s.number("alpha_x_ratio", c.sweep.alpha_x_ratio);
    s.number("omega_cut", c.sweep.omega_cut);
    s.numbers("etas", c.sweep.etas);
    s.numbers("epsilons", c.sweep.epsilons);
    s.finish();
  }
  if (r.has("ensemble")) {
    Reader s(r.raw("ensemble"), "ensemble");
    if (s.has("members")) {
      const json& a = s.raw("members");
      if (!a.is_array()) fail("ensemble.members", "expected an array");
      c.ensemble.members.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        c.ensemble.members.push_back(
            read_tls(a[i], "ensemble.members[" + std::to_string(i) + "]"));
      }
    }
    auto& o = c.ensemble.options;
    s.number("gamma_mid", c.ensemble.gamma_mid);
    enum_field(s, "mode", o.mode, ensemble_mode_from_string);
    s.integer("grid_per_decade", o.grid_per_decade);
    s.number("relaxation_times", o.relaxation_times);
    s.number("min_relaxation_times", o.min_relaxation_times);
    s.number("samples_per_rate", o.samples_per_rate);
    s.number("band_top", o.band_top);
    s.get("max_samples", o.max_samples);
    s.number("direct_step_budget", o.direct_step_budget);
    s.number("faithful_fs", o.faithful_fs);
    s.number("faithful_t_max", o.faithful_t_max);
    s.finish();
  }
  if (r.has("classical")) {
    Reader s(r.raw("classical"), "classical");
    auto& k = c.classical;
    s.number("w_total", k.w_total);
    s.number("dw", k.dw);
    s.number("drive_freq", k.drive_freq);
    s.numbers("amps", k.amps);
    s.integer("seeds", k.seeds);
    s.get("seed", k.seed);
    s.number("fs", k.fs);
    s.number("t_max", k.t_max);
    s.number("segment_length", k.segment_length);
    s.number("omega_cut", k.omega_cut);
    s.number("tolerance", k.tolerance);
    s.finish();
  }
  if (r.has("physical_units")) {
    Reader s(r.raw("physical_units"), "physical_units");
    PhysicalUnits u;
    s.number("gamma_hz", u.gamma_hz);
    s.number("temperature_k", u.temperature_k);
    s.finish();
    c.physical_units = u;
  }
  r.mark("physical_units");
  for (const char* key : {"drives", "simulation", "psd", "dephasing", "sweep", "ensemble",
                          "classical"}) {
    r.mark(key);
  }
  r.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize(const RunConfig& c) {
  json j;
  j["format_version"] = c.format_version;
  j["mode"] = to_string(c.mode);
  j["output_dir"] = c.output_dir;
  j["preset"] = c.preset;
  j["note"] = c.note;
  j["parallel"] = c.parallel;
  j["tls"] = tls_json(c.tls);
  j["drives"] = json::array();
  for (const auto& d : c.drives) j["drives"].push_back(drive_json(d));
  j["simulation"] = {{"fs", c.simulation.fs},
                     {"t_max", c.simulation.t_max},
                     {"initial_state", c.simulation.initial_state},
                     {"propagator", c.simulation.propagator}};
  j["psd"] = {{"estimator", to_string(c.psd.estimator)},
              {"welch_segments", c.psd.welch_segments},
              {"welch_overlap", c.psd.welch_overlap}};
  j["dephasing"] = {{"c0", c.dephasing.c0},
                    {"window", to_string(c.dephasing.window)},
                    {"fixed_point_tol", c.dephasing.fixed_point_tol},
                    {"max_iter", c.dephasing.max_iter}};
  j["sweep"] = {{"base", c.sweep.base},
                {"axis1", axis_json(c.sweep.axis1)},
                {"axis2", axis_json(c.sweep.axis2)},
                {"alpha_x_ratio", c.sweep.alpha_x_ratio},
                {"omega_cut", c.sweep.omega_cut},
                {"etas", c.sweep.etas},
                {"epsilons", c.sweep.epsilons}};
  json members = json::array();
  for (const auto& m : c.ensemble.members) members.push_back(tls_json(m));
  const auto& o = c.ensemble.options;
  j["ensemble"] = {{"members", members},
                   {"gamma_mid", c.ensemble.gamma_mid},
                   {"mode", to_string(o.mode)},
                   {"grid_per_decade", o.grid_per_decade},
                   {"relaxation_times", o.relaxation_times},
                   {"min_relaxation_times", o.min_relaxation_times},
                   {"samples_per_rate", o.samples_per_rate},
                   {"band_top", o.band_top},
                   {"max_samples", o.max_samples},
                   {"direct_step_budget", o.direct_step_budget},
                   {"faithful_fs", o.faithful_fs},
                   {"faithful_t_max", o.faithful_t_max}};
  const auto& k = c.classical;
  j["classical"] = {{"w_total", k.w_total},       {"dw", k.dw},
                    {"drive_freq", k.drive_freq}, {"amps", k.amps},
                    {"seeds", k.seeds},           {"seed", k.seed},
                    {"fs", k.fs},                 {"t_max", k.t_max},
                    {"segment_length", k.segment_length},
                    {"omega_cut", k.omega_cut},   {"tolerance", k.tolerance}};
  if (c.physical_units) {
    j["physical_units"] = {{"gamma_hz", c.physical_units->gamma_hz},
                           {"temperature_k", c.physical_units->temperature_k}};
  } else {
    j["physical_units"] = nullptr;
  }
  return j.dump(2) + "\n";
}

TlsParams resolved_tls(const RunConfig& cfg) { return cfg.tls.resolve(cfg.physical_theta()); }

EnsembleSpec resolved_ensemble(const RunConfig& cfg) {
  EnsembleSpec spec;
  const auto theta = cfg.physical_theta();
  for (const auto& m : cfg.ensemble.members) spec.members.push_back(m.resolve(theta));
  spec.gamma_mid = cfg.ensemble.gamma_mid;
  return spec;
}

SweepPlan resolved_plan(const RunConfig& cfg) {
  SweepPlan plan;
  plan.axis1 = cfg.sweep.axis1;
  plan.axis2 = cfg.sweep.axis2;
  plan.alpha_x_ratio = cfg.sweep.alpha_x_ratio;
  if (cfg.sweep.base == "ensemble") {
    plan.base = resolved_ensemble(cfg);
  } else {
    plan.base = resolved_tls(cfg);
  }
  if (!cfg.drives.empty()) plan.drive = cfg.drives.front();
  plan.dephasing = cfg.dephasing;
  plan.fs = cfg.simulation.fs;
  plan.t_max = cfg.simulation.t_max;
  plan.ensemble = cfg.ensemble.options;
  plan.ensemble.threads = cfg.parallel;
  plan.omega_cut = cfg.sweep.omega_cut;
  plan.threads = cfg.parallel;
  return plan;
}

}  // namespace tlsnoise::cli
