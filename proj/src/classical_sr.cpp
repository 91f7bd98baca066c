#include "tlsnoise/classical_sr.hpp"

#include "tlsnoise/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

namespace tlsnoise::classical {

using detail::require;

void ClassicalTls::validate() const {
  require(std::isfinite(w_total) && w_total > 0.0, "classical TLS: w_total must be > 0");
  require(std::isfinite(dw) && std::abs(dw) <= w_total, "classical TLS: |dw| must be <= w_total");
  require(std::isfinite(drive_amp) && drive_amp >= 0.0, "classical TLS: drive_amp must be >= 0");
  require(std::isfinite(drive_freq) && drive_freq >= 0.0,
          "classical TLS: drive_freq must be >= 0");
}

double ClassicalTls::rate_plus(double t) const {
  return 0.5 * w_total - 0.5 * dw - 0.5 * drive_amp * std::cos(drive_freq * t);
}

double ClassicalTls::rate_minus(double t) const {
  return 0.5 * w_total + 0.5 * dw + 0.5 * drive_amp * std::cos(drive_freq * t);
}

double ClassicalTls::max_rate() const {
  return 0.5 * w_total + 0.5 * std::abs(dw) + 0.5 * drive_amp;
}

bool ClassicalTls::rates_nonnegative() const {
  return 0.5 * w_total - 0.5 * std::abs(dw) - 0.5 * drive_amp >= -1e-15 * w_total;
}

double lorentzian_psd(const ClassicalTls& tls, double omega) {
  if (!(tls.w_total > 0.0)) throw InvalidParameter("lorentzian_psd: w_total must be > 0");
  const double w = tls.w_total;
  return (w / std::numbers::pi) / (w * w + omega * omega);
}

Ratio redistribution_ratio(const ClassicalTls& tls) {
  tls.validate();
  const double w = tls.w_total;
  const double wd = tls.drive_freq;
  const double r = 0.5 * tls.drive_amp * tls.drive_amp / (w * w + wd * wd);
  return {r, r <= 1.0};
}

double DrivenPsd::background(double omega) const {
  return background_scale * lorentzian_psd(tls, omega);
}

double DrivenPsd::total_weight() const {
  double w = background_scale;
  for (const auto& line : lines) w += 2.0 * line.weight;
  return w;
}

DrivenPsd driven_psd_weak(const ClassicalTls& tls) {
  const Ratio r = redistribution_ratio(tls);
  if (!r.in_range) {
    std::ostringstream os;
    os << "driven_psd_weak: redistribution ratio " << r.value
       << " exceeds 1; weak-drive form does not apply";
    throw OutOfValidity(os.str());
  }
  DrivenPsd out{tls, 1.0 - r.value, {}};
  if (r.value > 0.0) out.lines.push_back({tls.drive_freq, 0.5 * r.value});
  return out;
}

TimeSeries rate_ode_trajectory(const ClassicalTls& tls, double s0, double fs, double t_max,
                               int substeps) {
  tls.validate();
  require(std::abs(s0) <= 1.0, "rate_ode_trajectory: s0 must lie in [-1, 1]");
  require(fs > 0.0 && t_max > 0.0, "rate_ode_trajectory: fs and t_max must be > 0");
  const std::int64_t n = sample_count(fs, t_max);

  const double omega_max = std::max(tls.w_total, tls.drive_freq);
  const double sample_dt = 1.0 / fs;
  if (substeps <= 0) {
    substeps = std::max(1, static_cast<int>(std::ceil(sample_dt * omega_max / 0.1 - 1e-12)));
  } else if (sample_dt / substeps * omega_max > 0.1) {
    std::ostringstream os;
    os << "rate_ode_trajectory: step " << sample_dt / substeps << " times max rate "
       << omega_max << " exceeds 0.1";
    throw StabilityViolation(os.str());
  }
  const double h = sample_dt / substeps;

  const double w = tls.w_total;
  auto rhs = [&](double s, double t) {
    return -w * s + tls.dw + tls.drive_amp * std::cos(tls.drive_freq * t);
  };

  TimeSeries ts;
  ts.values.resize(n);
  ts.fs = fs;
  ts.t_max = t_max;
  ts.initial_state = "s0=" + std::to_string(s0);
  double s = s0;
  for (std::int64_t k = 0; k < n; ++k) {
    ts.values(k) = s;
    for (int j = 0; j < substeps; ++j) {
      const double t = (static_cast<double>(k) * substeps + j) * h;
      const double k1 = rhs(s, t);
      const double k2 = rhs(s + 0.5 * h * k1, t + 0.5 * h);
      const double k3 = rhs(s + 0.5 * h * k2, t + 0.5 * h);
      const double k4 = rhs(s + h * k3, t + h);
      s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return ts;
}

TimeSeries telegraph_sample(const ClassicalTls& tls, std::uint64_t seed, double fs,
                            double t_max) {
  tls.validate();
  require(fs > 0.0 && t_max > 0.0, "telegraph_sample: fs and t_max must be > 0");
  if (!tls.rates_nonnegative()) {
    std::ostringstream os;
    os << "telegraph_sample: switching rates go negative over the drive cycle (W/2 = "
       << 0.5 * tls.w_total << ", |dW|/2 + A/2 = " << 0.5 * (std::abs(tls.dw) + tls.drive_amp)
       << ")";
    throw InvalidParameter(os.str());
  }
  if (tls.max_rate() / fs >= 0.05) {
    std::ostringstream os;
    os << "telegraph_sample: max rate " << tls.max_rate() << " times dt " << 1.0 / fs
       << " must be < 0.05";
    throw InvalidParameter(os.str());
  }
  const std::int64_t n = sample_count(fs, t_max);
  const double dt = 1.0 / fs;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double p_up = 0.5 * (1.0 + tls.dw / tls.w_total);
  double s = uniform(rng) < p_up ? 1.0 : -1.0;

  TimeSeries ts;
  ts.values.resize(n);
  ts.fs = fs;
  ts.t_max = t_max;
  ts.initial_state = "stationary";

  // Rates are held at their step-midpoint values; with W+ + W- = W constant
  // the exact two-state flip probability is (W+/- / W) (1 - e^{-W dt}). The
  // cosine advances by rotation and is re-anchored every 1024 steps.
  const double occupancy = -std::expm1(-tls.w_total * dt) / tls.w_total;
  const double p_plus = (0.5 * tls.w_total - 0.5 * tls.dw) * occupancy;
  const double p_minus = (0.5 * tls.w_total + 0.5 * tls.dw) * occupancy;
  const double p_drive = 0.5 * tls.drive_amp * occupancy;
  const std::complex<double> turn = std::polar(1.0, tls.drive_freq * dt);
  std::complex<double> phase;
  for (std::int64_t k = 0; k < n; ++k) {
    if ((k & 1023) == 0) phase = std::polar(1.0, tls.drive_freq * (static_cast<double>(k) + 0.5) * dt);
    ts.values(k) = s;
    const double c = phase.real();
    const double p = s > 0.0 ? p_plus - p_drive * c : p_minus + p_drive * c;
    if (uniform(rng) < p) s = -s;
    phase *= turn;
  }
  return ts;
}

}  // namespace tlsnoise::classical
