#include "tlsnoise/sweep.hpp"

#include "tlsnoise/errors.hpp"
#include "tlsnoise/parallel.hpp"
#include "tlsnoise/version.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace tlsnoise {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

struct Baseline {
  Spectrum spectrum;
  TphiResult tphi;
};

// Everything a single cell needs, after the axes are applied.
struct Cell {
  TlsParams tls;
  EnsembleSpec ensemble;
  DriveParams drive;
};

PsdOptions trajectory_psd(const TlsParams& p, Normalization norm, double scale) {
  PsdOptions o;
  o.estimator = Estimator::periodogram;
  o.normalization = norm;
  o.reference_scale = scale;
  o.subtract_tail_mean = p.lambda() != 0.0;
  return o;
}

void apply(Cell& c, SweepAxis axis, double v, double alpha_x_ratio, bool single) {
  switch (axis) {
    case SweepAxis::alpha_z:
      c.drive.alpha_z = v;
      c.drive.alpha_x = alpha_x_ratio * v;
      break;
    case SweepAxis::omega_d:
      c.drive.omega_d = v;
      break;
    case SweepAxis::eta:
      if (single) {
        c.tls.eta = v;
      } else {
        for (auto& m : c.ensemble.members) m.eta = v;
      }
      break;
    case SweepAxis::epsilon:
      if (single) {
        c.tls.epsilon = v;
      } else {
        for (auto& m : c.ensemble.members) m.epsilon = v;
      }
      break;
  }
}

Cell make_cell(const SweepPlan& plan, std::size_t i, std::size_t j) {
  Cell c;
  if (plan.single()) {
    c.tls = std::get<TlsParams>(plan.base);
  } else {
    c.ensemble = std::get<EnsembleSpec>(plan.base);
  }
  c.drive = plan.drive;
  if (plan.axis1.name != SweepAxis::alpha_z && plan.axis2.name != SweepAxis::alpha_z) {
    c.drive.alpha_x = plan.alpha_x_ratio * c.drive.alpha_z;
  }
  apply(c, plan.axis1.name, plan.axis1.values[i], plan.alpha_x_ratio, plan.single());
  apply(c, plan.axis2.name, plan.axis2.values[j], plan.alpha_x_ratio, plan.single());
  return c;
}

// Undriven runs depend only on the TLS parameters.
std::string baseline_key(const Cell& c, bool single) {
  std::ostringstream os;
  os.precision(17);
  if (single) {
    os << c.tls.eta << ' ' << c.tls.epsilon;
  } else {
    for (const auto& m : c.ensemble.members) os << m.eta << ' ' << m.epsilon << ';';
  }
  return os.str();
}

EnsembleOptions inner_ensemble_options(const SweepPlan& plan) {
  EnsembleOptions o = plan.ensemble;
  // Cells already run in parallel; members inside a cell stay serial.
  if (resolve_threads(plan.threads) > 1) o.threads = 1;
  return o;
}

Baseline run_baseline(const SweepPlan& plan, const Cell& c) {
  Baseline b;
  if (plan.single()) {
    const TimeSeries u = integrate(c.tls, {}, BlochState::ground(), plan.fs, plan.t_max);
    b.spectrum = psd_from_timeseries(u, trajectory_psd(c.tls, Normalization::unit_weight, 1.0));
  } else {
    EnsembleSpec spec = c.ensemble;
    spec.shared_drive = {};
    b.spectrum = simulate_ensemble(spec, inner_ensemble_options(plan));
  }
  b.tphi = tphi_solve(b.spectrum, plan.dephasing);
  if (!b.tphi.converged) {
    throw NumericalFailure("sweep: undriven T_phi did not converge (last iterate " +
                           sci(b.tphi.t_phi) + ")");
  }
  return b;
}

Spectrum run_driven(const SweepPlan& plan, const Cell& c, const Baseline& b) {
  if (plan.single()) {
    const TimeSeries d = integrate(c.tls, c.drive, BlochState::ground(), plan.fs, plan.t_max);
    return psd_from_timeseries(d, trajectory_psd(c.tls, Normalization::reference,
                                                 b.spectrum.meta.scale));
  }
  EnsembleSpec spec = c.ensemble;
  spec.shared_drive = c.drive;
  return simulate_ensemble(spec, inner_ensemble_options(plan));
}

}  // namespace

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::alpha_z: return "alpha_z";
    case SweepAxis::omega_d: return "omega_d";
    case SweepAxis::eta: return "eta";
    case SweepAxis::epsilon: return "epsilon";
  }
  return "unknown";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "alpha_z") return SweepAxis::alpha_z;
  if (name == "omega_d") return SweepAxis::omega_d;
  if (name == "eta") return SweepAxis::eta;
  if (name == "epsilon") return SweepAxis::epsilon;
  throw InvalidParameter("unknown sweep axis '" + name + "'");
}

Axis log_axis(SweepAxis name, double lo, double hi, int n) {
  detail::require(lo > 0.0 && hi >= lo && n >= 1, "log_axis: need 0 < lo <= hi and n >= 1");
  Axis a{name, {}};
  if (n == 1) {
    a.values.push_back(lo);
    return a;
  }
  const double l0 = std::log10(lo);
  const double step = (std::log10(hi) - l0) / (n - 1);
  for (int i = 0; i < n; ++i) a.values.push_back(std::pow(10.0, l0 + i * step));
  return a;
}

void SweepPlan::validate() const {
  detail::require(!axis1.values.empty() && !axis2.values.empty(), "sweep: axes must be non-empty");
  detail::require(axis1.name != axis2.name, "sweep: the two axes must differ");
  for (const Axis* a : {&axis1, &axis2}) {
    for (const double v : a->values) {
      detail::require(std::isfinite(v) && (v >= 0.0 || a->name == SweepAxis::epsilon),
                      "sweep: axis " + to_string(a->name) + " has an invalid value");
    }
  }
  detail::require(std::isfinite(alpha_x_ratio) && alpha_x_ratio >= 0.0,
                  "sweep: alpha_x_ratio must be >= 0");
  if (single()) {
    std::get<TlsParams>(base).validate();
    sample_count(fs, t_max);
  } else {
    std::get<EnsembleSpec>(base).validate();
  }
  drive.validate();
  dephasing.validate();
  detail::require(omega_cut >= 0.0, "sweep: omega_cut must be >= 0");
}

std::optional<std::size_t> SweepResult::best() const {
  std::optional<std::size_t> out;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (!cells[k].converged) continue;
    if (!out || cells[k].ratio > cells[*out].ratio) out = k;
  }
  return out;
}

SweepResult run_grid(const SweepPlan& plan) {
  plan.validate();
  SweepResult r;
  r.axis1 = plan.axis1.name;
  r.axis2 = plan.axis2.name;
  r.n1 = plan.axis1.values.size();
  r.n2 = plan.axis2.values.size();
  const std::size_t total = r.n1 * r.n2;

  std::vector<Cell> cells;
  std::vector<std::size_t> which(total);
  std::map<std::string, std::size_t> keys;
  std::vector<Cell> baseline_cells;
  for (std::size_t i = 0; i < r.n1; ++i) {
    for (std::size_t j = 0; j < r.n2; ++j) {
      cells.push_back(make_cell(plan, i, j));
      const std::string key = baseline_key(cells.back(), plan.single());
      auto [it, fresh] = keys.emplace(key, baseline_cells.size());
      if (fresh) baseline_cells.push_back(cells.back());
      which[cells.size() - 1] = it->second;
    }
  }

  std::vector<Baseline> baselines(baseline_cells.size());
  parallel_for(baselines.size(), plan.threads,
               [&](std::size_t b) { baselines[b] = run_baseline(plan, baseline_cells[b]); });

  r.cells.resize(total);
  if (plan.keep_spectra) r.spectra.resize(total);
  parallel_for(total, plan.threads, [&](std::size_t k) {
    const Cell& c = cells[k];
    const Baseline& b = baselines[which[k]];
    SweepRecord& rec = r.cells[k];
    rec.alpha_z = c.drive.alpha_z;
    rec.alpha_x = c.drive.alpha_x;
    rec.omega_d = c.drive.omega_d;
    rec.eta = plan.single() ? c.tls.eta : c.ensemble.members.front().eta;
    rec.epsilon = plan.single() ? c.tls.epsilon : c.ensemble.members.front().epsilon;
    rec.t_phi_0 = b.tphi.t_phi;
    rec.t_phi_d = rec.ratio = rec.r_emp = nan;
    try {
      Spectrum d = run_driven(plan, c, b);
      const TphiResult td = tphi_solve(d, plan.dephasing);
      rec.t_phi_d = td.t_phi;
      rec.converged = td.converged;
      if (td.converged) rec.ratio = td.t_phi / b.tphi.t_phi;
      const double cut = plan.omega_cut > 0.0 ? plan.omega_cut : 1.0 / b.tphi.t_phi;
      rec.r_emp = empirical_redistribution(d, b.spectrum, cut);
      if (plan.keep_spectra) r.spectra[k] = std::move(d);
    } catch (const Error& e) {
      rec.converged = false;
      rec.error = e.what();
    }
  });

  for (auto& b : baselines) r.baselines.push_back(std::move(b.spectrum));
  const std::string text = describe(plan);
  r.provenance = {{"tool", "tlsnoise"},
                  {"version", version()},
                  {"config_hash", fnv1a_hex(text)},
                  {"deterministic", "true"},
                  {"plan", text}};
  return r;
}

SweepResult run_eta_scan(const TlsParams& base, const DriveParams& drive,
                         const std::vector<double>& etas, const SweepPlan& settings) {
  detail::require(!etas.empty(), "eta scan: need at least one eta");
  SweepPlan plan = settings;
  plan.base = base;
  plan.drive = drive;
  plan.axis1 = {SweepAxis::eta, etas};
  plan.axis2 = {SweepAxis::omega_d, {drive.omega_d}};
  // The drive is given in full; keep its alpha_x.
  plan.alpha_x_ratio = drive.alpha_z > 0.0 ? drive.alpha_x / drive.alpha_z : 0.0;
  plan.keep_spectra = true;
  return run_grid(plan);
}

std::size_t argmax_r(const SweepResult& scan) {
  std::size_t best = 0;
  bool found = false;
  for (std::size_t k = 0; k < scan.cells.size(); ++k) {
    if (!scan.cells[k].error.empty()) continue;
    if (!found || scan.cells[k].r_emp > scan.cells[best].r_emp) best = k;
    found = true;
  }
  if (!found) throw NumericalFailure("argmax_r: every cell failed");
  return best;
}

std::vector<SweepResult> run_epsilon_scan(const SweepPlan& plan,
                                          const std::vector<double>& epsilons) {
  detail::require(plan.single(), "epsilon scan: base must be a single TLS");
  detail::require(std::get<TlsParams>(plan.base).delta == 0.0, "epsilon scan: Delta must be 0");
  std::vector<SweepResult> out;
  for (const double eps : epsilons) {
    SweepPlan p = plan;
    std::get<TlsParams>(p.base).epsilon = eps;
    out.push_back(run_grid(p));
  }
  return out;
}

AlphaPeak find_alpha_peak(const SweepResult& grid, double min_prominence) {
  if (grid.axis1 != SweepAxis::alpha_z || grid.axis2 != SweepAxis::omega_d) {
    throw InvalidInput("find_alpha_peak: grid axes must be (alpha_z, omega_d)");
  }
  const auto top = grid.best();
  if (!top) throw NumericalFailure("find_alpha_peak: no converged cell");
  const std::size_t col = *top % grid.n2;

  AlphaPeak p;
  p.omega_d = grid.at(0, col).omega_d;
  for (std::size_t i = 0; i < grid.n1; ++i) {
    p.alpha_z.push_back(grid.at(i, col).alpha_z);
    p.ratio.push_back(grid.at(i, col).ratio);
  }
  const auto it = std::max_element(p.ratio.begin(), p.ratio.end(), [](double a, double b) {
    return std::isnan(a) || (!std::isnan(b) && a < b);
  });
  p.index = static_cast<std::size_t>(it - p.ratio.begin());
  p.alpha_peak = p.alpha_z[p.index];
  if (p.index == 0 || p.index + 1 == p.ratio.size()) return p;

  const double y0 = p.ratio[p.index - 1];
  const double y1 = p.ratio[p.index];
  const double y2 = p.ratio[p.index + 1];
  p.prominence = y1 / std::max(y0, y2) - 1.0;
  p.interior = p.prominence > min_prominence;
  const double x0 = std::log10(p.alpha_z[p.index - 1]);
  const double x1 = std::log10(p.alpha_z[p.index]);
  const double x2 = std::log10(p.alpha_z[p.index + 1]);
  // Vertex of the parabola through the three points.
  const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
  const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
  if (den != 0.0) p.alpha_peak = std::pow(10.0, std::clamp(x1 - 0.5 * num / den, x0, x2));
  return p;
}

void write_csv(std::ostream& os, const SweepResult& r) {
  for (const auto& [k, v] : r.provenance) os << "# " << k << '=' << v << '\n';
  for (const auto& c : r.cells) {
    if (!c.error.empty()) {
      os << "# failed alpha_z=" << sci(c.alpha_z) << " omega_d=" << sci(c.omega_d) << ": "
         << c.error << '\n';
    }
  }
  os << "alpha_z,omega_d,eta,epsilon,t_phi_0,t_phi_d,ratio,R_emp,converged\n";
  for (const auto& c : r.cells) {
    os << sci(c.alpha_z) << ',' << sci(c.omega_d) << ',' << sci(c.eta) << ',' << sci(c.epsilon)
       << ',' << sci(c.t_phi_0) << ',' << sci(c.t_phi_d) << ',' << sci(c.ratio) << ','
       << sci(c.r_emp) << ',' << (c.converged ? 1 : 0) << '\n';
  }
}

std::string describe(const SweepPlan& plan) {
  std::ostringstream os;
  auto axis = [&](const Axis& a) {
    os << to_string(a.name) << "=[";
    for (std::size_t i = 0; i < a.values.size(); ++i) os << (i ? " " : "") << sci(a.values[i]);
    os << "] ";
  };
  axis(plan.axis1);
  axis(plan.axis2);
  os << "alpha_x_ratio=" << sci(plan.alpha_x_ratio) << ' ';
  auto tls = [&](const TlsParams& p) {
    os << "(eps=" << sci(p.epsilon) << " delta=" << sci(p.delta) << " gamma=" << sci(p.gamma_relax)
       << " kappa=" << sci(p.kappa_excite) << " eta=" << sci(p.eta) << ")";
  };
  if (plan.single()) {
    os << "tls=";
    tls(std::get<TlsParams>(plan.base));
    os << " fs=" << sci(plan.fs) << " t_max=" << sci(plan.t_max);
  } else {
    const auto& e = std::get<EnsembleSpec>(plan.base);
    os << "ensemble=[";
    for (const auto& m : e.members) tls(m);
    os << "] gamma_mid=" << sci(e.gamma_mid) << " mode=" << to_string(plan.ensemble.mode);
  }
  os << " drive=(" << sci(plan.drive.alpha_z) << ' ' << sci(plan.drive.alpha_x) << ' '
     << sci(plan.drive.omega_d) << ") c0=" << sci(plan.dephasing.c0)
     << " window=" << to_string(plan.dephasing.window)
     << " tol=" << sci(plan.dephasing.fixed_point_tol) << " max_iter=" << plan.dephasing.max_iter
     << " omega_cut=" << sci(plan.omega_cut) << " estimator=periodogram";
  return os.str();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tlsnoise
