#pragma once

#include "tlsnoise/time_series.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace tlsnoise {

/// A delta function in the spectrum: weight `weight` sitting at +omega (its
/// mirror at -omega carries the same weight).
struct SpectralLine {
  double omega = 0.0;
  double weight = 0.0;
};

enum class Estimator {
  /// |X(omega)|^2 of the full-length series, X = dt * DFT.
  periodogram,
  /// Segment-averaged periodogram (8 segments, 50% overlap, no taper).
  welch,
  /// Real part of the Fourier transform of s_z(t), read as the correlation
  /// function C(|tau|). Integrates to s_z(0) exactly over the DFT grid.
  correlation,
};

/// How periodogram output is scaled. `mean_square` divides by 2 pi t_max so a
/// stationary signal integrates to <s^2>. `unit_weight` rescales the result
/// to two-sided weight 1. `reference` multiplies by PsdOptions::reference_scale,
/// typically the factor an undriven run picked under `unit_weight`.
enum class Normalization { mean_square, unit_weight, reference };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);
std::string to_string(Normalization n);
Normalization normalization_from_string(const std::string& name);

struct SpectrumMeta {
  double fs = 0.0;
  double t_max = 0.0;
  Estimator estimator = Estimator::periodogram;
  Normalization normalization = Normalization::mean_square;
  /// Factor applied to |X|^2 (1 for the correlation estimator).
  double scale = 1.0;
  int segments = 1;
  double overlap = 0.0;
  bool detrended = false;
  /// Two-sided weight removed by clamping negative estimator output to zero.
  double clipped_weight = 0.0;
  std::string note;
};

/// Two-sided spectral density S(omega) evaluated on omega > 0.
///
/// `omega` is strictly ascending. Because S is even, the two-sided integral
/// is twice the integral over omega > 0. The omega = 0 value, when the
/// estimator produces one, is held in `dc_power` rather than on the grid.
struct Spectrum {
  Eigen::VectorXd omega;
  Eigen::VectorXd power;
  double dc_power = std::numeric_limits<double>::quiet_NaN();
  std::vector<SpectralLine> lines;
  SpectrumMeta meta;

  Eigen::Index size() const { return omega.size(); }
  bool has_dc() const { return !std::isnan(dc_power); }
  /// Two-sided integral: 2 * (int_0^inf S + sum of line weights). The segment
  /// below the first grid point uses dc_power when present, else is flat.
  double norm_total() const;
};

struct PsdOptions {
  Estimator estimator = Estimator::periodogram;
  Normalization normalization = Normalization::mean_square;
  double reference_scale = 1.0;
  /// Subtract the mean of the final `tail_fraction` of the series first.
  bool subtract_tail_mean = false;
  double tail_fraction = 0.25;
  int welch_segments = 8;
  double welch_overlap = 0.5;
};

/// Largest 2^a 3^b 5^c not above n. Series of that length transform in
/// O(n log n); lengths with large prime factors do not.
Eigen::Index smooth_size_below(Eigen::Index n);

/// FFT-based estimate of S(omega) on omega_k = 2 pi k / t_max, k = 1..N/2.
Spectrum psd_from_timeseries(const TimeSeries& ts, const PsdOptions& opts = {});

/// Pointwise mean of spectra sharing one grid (e.g. periodograms of
/// independent realisations). Lines are averaged by position.
Spectrum mean_spectrum(std::span<const Spectrum> spectra);

/// Geometric cell centres, `per_decade` per decade, spanning [lo, hi].
Eigen::VectorXd log_grid(double lo, double hi, int per_decade);

/// Sums spectra after cell-averaging each onto `grid`. Outside a member's own
/// range its power continues along a power-law fit of its outermost decade.
Spectrum aggregate(std::span<const Spectrum> spectra, const Eigen::VectorXd& grid);

/// Two-sided weight in omega_lo <= |omega| <= omega_hi, excluding the DC bin.
double band_weight(const Spectrum& s, double omega_lo, double omega_hi);

/// 1 - band_weight(driven, 0, cut) / band_weight(undriven, 0, cut).
double empirical_redistribution(const Spectrum& driven, const Spectrum& undriven,
                                double omega_cut);

/// Evaluates an analytic density on `grid` and attaches `lines` unchanged.
Spectrum rasterize(const std::function<double(double)>& density,
                   const Eigen::VectorXd& grid, std::vector<SpectralLine> lines = {});

/// Integral of the piecewise-linear power over [a, b] (clipped to the grid).
double integrate_power(const Spectrum& s, double a, double b);

/// Least-squares slope of log(power) against log(omega) on [lo, hi].
double loglog_slope(const Spectrum& s, double lo, double hi);

/// Two-column CSV (omega, power) with '#' metadata lines. Lines are listed in
/// a trailing comment block.
void write_csv(std::ostream& os, const Spectrum& s);

}  // namespace tlsnoise
