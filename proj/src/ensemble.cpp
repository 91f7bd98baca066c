#include "tlsnoise/ensemble.hpp"

#include "tlsnoise/errors.hpp"
#include "tlsnoise/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tlsnoise {

void EnsembleSpec::validate() const {
  detail::require(!members.empty(), "ensemble: need at least one member");
  for (const auto& m : members) m.validate();
  shared_drive.validate();
  detail::require(per_member_sim.empty() || per_member_sim.size() == members.size(),
                  "ensemble: per_member_sim must be empty or match the member count");
  for (const auto& s : per_member_sim) sample_count(s.fs, s.t_max);
  detail::require(gamma_mid > 0.0, "ensemble: gamma_mid must be > 0");
}

EnsembleSpec default_1f_ensemble() {
  EnsembleSpec spec;
  for (int e = -6; e <= 0; ++e) {
    const double g = std::pow(10.0, e);
    spec.members.push_back(TlsParams::from_total(g, 0.0, g));
  }
  spec.gamma_mid = 1e-3;
  return spec;
}

std::string to_string(EnsembleMode m) {
  return m == EnsembleMode::faithful ? "faithful" : "resolved";
}

EnsembleMode ensemble_mode_from_string(const std::string& name) {
  if (name == "resolved") return EnsembleMode::resolved;
  if (name == "faithful") return EnsembleMode::faithful;
  throw InvalidParameter("unknown ensemble mode '" + name + "'");
}

namespace {

// Snaps t_max to a whole, FFT-friendly number of samples.
MemberSampling snapped(double fs, double t_max) {
  const auto n = smooth_size_below(std::max<Eigen::Index>(2, std::llround(fs * t_max)));
  return {fs, static_cast<double>(n) / fs};
}

// integrate_averaged may move dt onto the drive period, leaving an arbitrary
// sample count; the tail is dropped down to a smooth length.
void trim_to_smooth(TimeSeries& ts) {
  const Eigen::Index n = smooth_size_below(ts.size());
  if (n == ts.size()) return;
  ts.values.conservativeResize(n);
  ts.t_max = static_cast<double>(n) / ts.fs;
}

bool needs_map(const TlsParams& p, const DriveParams& d, const MemberSampling& s,
               const EnsembleOptions& opts) {
  return s.t_max * max_frequency(p, d) / IntegratorOptions{}.step_bound > opts.direct_step_budget;
}

TimeSeries run_member(const TlsParams& p, const DriveParams& d, const MemberSampling& s,
                      bool averaged) {
  if (!averaged) return integrate(p, d, BlochState::ground(), s.fs, s.t_max);
  return integrate_averaged(p, d, BlochState::ground(), 1.0 / s.fs, s.t_max);
}

PsdOptions member_psd(const TlsParams& p, Normalization norm, double scale) {
  PsdOptions o;
  o.estimator = Estimator::periodogram;
  o.normalization = norm;
  o.reference_scale = scale;
  o.subtract_tail_mean = p.lambda() != 0.0;
  return o;
}

}  // namespace

MemberSampling choose_sampling(const TlsParams& member, const DriveParams& drive,
                               double band_top, const EnsembleOptions& opts) {
  const double g = member.gamma_total();
  if (opts.mode == EnsembleMode::faithful) return snapped(opts.faithful_fs, opts.faithful_t_max);

  const auto cap = static_cast<double>(opts.max_samples);
  double t_max = opts.relaxation_times / g;
  double fs = opts.samples_per_rate * g;
  if (drive.active()) {
    const double need = std::min(4.0 * drive.omega_d, band_top) / std::numbers::pi;
    fs = std::max(fs, need);
  }
  if (fs * t_max > cap) t_max = std::max(opts.min_relaxation_times / g, cap / fs);
  if (fs * t_max > cap) fs = cap / t_max;
  return snapped(fs, t_max);
}

EnsembleRun simulate_ensemble_members(const EnsembleSpec& spec, const EnsembleOptions& opts) {
  spec.validate();
  detail::require(opts.grid_per_decade >= 1, "ensemble: grid_per_decade must be >= 1");
  detail::require(opts.max_samples >= 16, "ensemble: max_samples must be >= 16");

  double fastest = 0.0;
  for (const auto& m : spec.members) fastest = std::max(fastest, m.gamma_total());
  const double band_top = opts.band_top > 0.0 ? opts.band_top : 10.0 * fastest;
  const DriveParams& drive = spec.shared_drive;
  const bool driven = drive.active() || drive.static_field();

  const std::size_t n = spec.members.size();
  EnsembleRun run;
  run.members.resize(n);
  run.sampling.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    run.sampling[i] = spec.per_member_sim.empty()
                          ? choose_sampling(spec.members[i], drive, band_top, opts)
                          : spec.per_member_sim[i];
  }

  parallel_for(n, opts.threads, [&](std::size_t i) {
    const TlsParams& p = spec.members[i];
    try {
      if (!driven) {
        const MemberSampling& grid = run.sampling[i];
        const TimeSeries u = run_member(p, {}, grid, needs_map(p, {}, grid, opts));
        run.members[i] = psd_from_timeseries(u, member_psd(p, Normalization::unit_weight, 1.0));
        return;
      }
      const bool averaged = needs_map(p, drive, run.sampling[i], opts);
      TimeSeries d = run_member(p, drive, run.sampling[i], averaged);
      trim_to_smooth(d);
      // The undriven twin reuses the driven grid, which integrate_averaged may
      // have snapped to the drive period.
      const MemberSampling grid{d.fs, d.t_max};
      run.sampling[i] = grid;
      const TimeSeries u = run_member(p, {}, grid, averaged);
      const Spectrum su = psd_from_timeseries(u, member_psd(p, Normalization::unit_weight, 1.0));
      run.members[i] = psd_from_timeseries(d, member_psd(p, Normalization::reference, su.meta.scale));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "ensemble member " << i << " (Gamma = " << p.gamma_total() << "): " << e.what();
      throw NumericalFailure(os.str());
    }
  });

  double lo = run.members.front().omega(0);
  double hi = run.members.front().omega(run.members.front().size() - 1);
  for (const auto& s : run.members) {
    lo = std::min(lo, s.omega(0));
    hi = std::max(hi, s.omega(s.size() - 1));
  }
  run.aggregate = aggregate(run.members, log_grid(lo, hi, opts.grid_per_decade));
  run.aggregate.meta.note += std::string(", mode=") + to_string(opts.mode);
  return run;
}

Spectrum simulate_ensemble(const EnsembleSpec& spec, const EnsembleOptions& opts) {
  return simulate_ensemble_members(spec, opts).aggregate;
}

}  // namespace tlsnoise
