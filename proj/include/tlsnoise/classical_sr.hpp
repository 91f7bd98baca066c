#pragma once

#include "tlsnoise/spectrum.hpp"
#include "tlsnoise/time_series.hpp"

#include <cstdint>
#include <vector>

namespace tlsnoise::classical {

/// Classical two-state fluctuator s = +-1 with a periodically modulated rate
/// asymmetry.
///
/// W+ is the rate of leaving s = +1, W- the rate of leaving s = -1. The
/// drive enters with opposite sign in the two rates:
///
///     W+(t) = W/2 - dW/2 - (A/2) cos(wd t)
///     W-(t) = W/2 + dW/2 + (A/2) cos(wd t)
///
/// so the total rate W+ + W- = W stays constant and the asymmetry is
/// dW(t) = W- - W+ = dW + A cos(wd t). With this convention the mean obeys
/// ds/dt = -W s + dW(t) and the redistribution ratio (A^2/2)/(W^2 + wd^2)
/// holds for every admissible A.
struct ClassicalTls {
  double w_total = 1.0;
  double dw = 0.0;
  double drive_amp = 0.0;
  double drive_freq = 0.0;

  void validate() const;
  double rate_plus(double t) const;
  double rate_minus(double t) const;
  /// Largest rate reached over a drive period.
  double max_rate() const;
  /// True when both rates stay non-negative over a full drive period.
  bool rates_nonnegative() const;
};

/// Undriven symmetric Lorentzian (W/pi) / (W^2 + omega^2); unit integral over
/// the real line.
double lorentzian_psd(const ClassicalTls& tls, double omega);

struct Ratio {
  double value = 0.0;
  /// False when the raw value exceeds 1 (outside the weak-drive formula).
  bool in_range = true;
};

Ratio redistribution_ratio(const ClassicalTls& tls);

/// (1 - R) * Lorentzian background plus lines of weight R/2 at +-wd.
struct DrivenPsd {
  ClassicalTls tls;
  double background_scale = 1.0;
  std::vector<SpectralLine> lines;

  double background(double omega) const;
  /// Two-sided total: background integral plus both mirror images of every line.
  double total_weight() const;
};

DrivenPsd driven_psd_weak(const ClassicalTls& tls);

/// RK4 integration of ds/dt = -W s + dW(t), sampled at 1/fs. Internal steps
/// satisfy h * max(W, wd) <= 0.1; `substeps` > 0 forces the step count per
/// sample and throws StabilityViolation if that breaks the bound.
TimeSeries rate_ode_trajectory(const ClassicalTls& tls, double s0, double fs, double t_max,
                               int substeps = 0);

/// Discrete-time random telegraph trajectory. Rates are frozen at each step
/// midpoint and the flip probability is the exact two-state value
/// (W+-/W)(1 - exp(-W/fs)). Requires max rate / fs < 0.05 and non-negative rates. The
/// initial state is drawn from the stationary distribution of the mean.
TimeSeries telegraph_sample(const ClassicalTls& tls, std::uint64_t seed, double fs, double t_max);

}  // namespace tlsnoise::classical
