#include "tlsnoise/spectrum.hpp"

#include "tlsnoise/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

namespace tlsnoise {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::correlation: return "correlation";
    case Estimator::periodogram: return "periodogram";
    case Estimator::welch: return "welch";
  }
  return "unknown";
}

Estimator estimator_from_string(const std::string& name) {
  if (name == "correlation") return Estimator::correlation;
  if (name == "periodogram") return Estimator::periodogram;
  if (name == "welch") return Estimator::welch;
  throw InvalidParameter("unknown estimator '" + name + "'");
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::mean_square: return "mean_square";
    case Normalization::unit_weight: return "unit_weight";
    case Normalization::reference: return "reference";
  }
  return "unknown";
}

Normalization normalization_from_string(const std::string& name) {
  if (name == "mean_square") return Normalization::mean_square;
  if (name == "unit_weight") return Normalization::unit_weight;
  if (name == "reference") return Normalization::reference;
  throw InvalidParameter("unknown normalization '" + name + "'");
}

namespace {

constexpr double pi = std::numbers::pi;

bool is_smooth(Eigen::Index m) {
  for (const Eigen::Index f : {2, 3, 5}) {
    while (m % f == 0) m /= f;
  }
  return m == 1;
}

// Smallest 2^a 3^b 5^c >= n, so the mixed-radix FFT stays O(n log n).
Eigen::Index smooth_size(Eigen::Index n) {
  for (Eigen::Index m = std::max<Eigen::Index>(n, 1);; ++m) {
    if (is_smooth(m)) return m;
  }
}

std::vector<std::complex<double>> half_spectrum(const std::vector<double>& x) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> out;
  fft.fwd(out, x);
  return out;
}

// Cumulative trapezoid of the grid power, for O(log n) range integrals.
std::vector<double> cumulative(const Spectrum& s) {
  std::vector<double> cum(static_cast<std::size_t>(s.size()), 0.0);
  for (Eigen::Index i = 1; i < s.size(); ++i) {
    cum[i] = cum[i - 1] + 0.5 * (s.power(i) + s.power(i - 1)) * (s.omega(i) - s.omega(i - 1));
  }
  return cum;
}

// Primitive of the piecewise-linear power at x, measured from omega(0); x is
// clamped to the grid.
double primitive(const Spectrum& s, const std::vector<double>& cum, double x) {
  const Eigen::Index n = s.size();
  if (x <= s.omega(0)) return 0.0;
  if (x >= s.omega(n - 1)) return cum.back();
  const double* begin = s.omega.data();
  const auto i = static_cast<Eigen::Index>(std::upper_bound(begin, begin + n, x) - begin) - 1;
  const double w0 = s.omega(i);
  const double w1 = s.omega(i + 1);
  const double frac = (x - w0) / (w1 - w0);
  const double px = s.power(i) + frac * (s.power(i + 1) - s.power(i));
  return cum[i] + 0.5 * (s.power(i) + px) * (x - w0);
}

struct PowerLaw {
  double amplitude = 0.0;  // power = amplitude * omega^exponent
  double exponent = 0.0;

  double integral(double a, double b) const {
    if (amplitude == 0.0 || b <= a) return 0.0;
    if (std::abs(exponent + 1.0) < 1e-12) return amplitude * std::log(b / a);
    return amplitude * (std::pow(b, exponent + 1.0) - std::pow(a, exponent + 1.0)) /
           (exponent + 1.0);
  }
};

PowerLaw fit_power_law(const Spectrum& s, double lo, double hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s.omega(i) < lo || s.omega(i) > hi || !(s.power(i) > 0.0)) continue;
    const double x = std::log(s.omega(i));
    const double y = std::log(s.power(i));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count == 0) return {};
  if (count == 1 || sxx * count - sx * sx <= 0.0) return {std::exp(sy / count), 0.0};
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / count;
  return {std::exp(intercept), slope};
}

}  // namespace

Eigen::Index smooth_size_below(Eigen::Index n) {
  for (Eigen::Index m = n; m > 1; --m) {
    if (is_smooth(m)) return m;
  }
  return 1;
}

double Spectrum::norm_total() const {
  double one_sided = 0.0;
  if (size() > 0) {
    const double first = has_dc() ? 0.5 * (dc_power + power(0)) : power(0);
    one_sided += first * omega(0);
    for (Eigen::Index i = 1; i < size(); ++i) {
      one_sided += 0.5 * (power(i) + power(i - 1)) * (omega(i) - omega(i - 1));
    }
  }
  for (const auto& line : lines) one_sided += line.weight;
  return 2.0 * one_sided;
}

Spectrum psd_from_timeseries(const TimeSeries& ts, const PsdOptions& opts) {
  const Eigen::Index n = ts.size();
  if (n < 2) throw InvalidInput("psd_from_timeseries: need at least 2 samples");
  if (!(ts.fs > 0.0) || !std::isfinite(ts.fs)) {
    throw InvalidInput("psd_from_timeseries: series has no valid sampling rate");
  }
  if (!ts.values.allFinite()) throw InvalidInput("psd_from_timeseries: non-finite samples");
  const double dt = 1.0 / ts.fs;

  std::vector<double> x(ts.values.data(), ts.values.data() + n);
  bool detrended = false;
  if (opts.subtract_tail_mean) {
    if (!(opts.tail_fraction > 0.0 && opts.tail_fraction <= 1.0)) {
      throw InvalidParameter("psd_from_timeseries: tail_fraction must lie in (0, 1]");
    }
    const auto tail = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(opts.tail_fraction * n));
    const double mean = ts.values.tail(tail).mean();
    for (double& v : x) v -= mean;
    detrended = true;
  }

  Spectrum s;
  s.meta.fs = ts.fs;
  s.meta.estimator = opts.estimator;
  s.meta.detrended = detrended;

  if (opts.estimator == Estimator::correlation) {
    // S(w) = (1/pi) Re int_0^inf s(t) e^{-iwt} dt. The series is zero-padded
    // to a smooth length; a relaxation trajectory has decayed by t_max.
    const Eigen::Index m = smooth_size(n);
    const bool averaged = ts.sampling == Sampling::interval_average;
    if (!averaged) x[0] *= 0.5;
    x.resize(static_cast<std::size_t>(m), 0.0);
    const auto spec = half_spectrum(x);
    const Eigen::Index bins = m / 2;
    const double d_omega = 2.0 * pi / (static_cast<double>(m) * dt);

    auto density = [&](Eigen::Index k) {
      std::complex<double> v = spec[static_cast<std::size_t>(k)] * dt;
      if (averaged && k > 0) {
        const double half = 0.5 * k * d_omega * dt;
        v *= std::polar(1.0, -half) / (std::sin(half) / half);
      }
      return v.real() / pi;
    };

    s.omega.resize(bins);
    s.power.resize(bins);
    s.dc_power = density(0);
    double clipped = 0.0;
    for (Eigen::Index k = 1; k <= bins; ++k) {
      const double p = density(k);
      s.omega(k - 1) = k * d_omega;
      if (p < 0.0) clipped -= p;
      s.power(k - 1) = std::max(p, 0.0);
    }
    s.meta.t_max = static_cast<double>(m) * dt;
    s.meta.clipped_weight = 2.0 * clipped * d_omega;
    if (m != n) s.meta.note = "zero-padded from " + std::to_string(n) + " samples";
    return s;
  }

  // Periodogram family: |dt X_k|^2 averaged over segments, then scaled.
  Eigen::Index seg_len = n;
  Eigen::Index step = n;
  int segments = 1;
  if (opts.estimator == Estimator::welch) {
    if (opts.welch_segments < 1) throw InvalidParameter("welch: segments must be >= 1");
    if (!(opts.welch_overlap >= 0.0 && opts.welch_overlap < 1.0)) {
      throw InvalidParameter("welch: overlap must lie in [0, 1)");
    }
    const double denom = 1.0 + (opts.welch_segments - 1) * (1.0 - opts.welch_overlap);
    seg_len = static_cast<Eigen::Index>(std::floor(n / denom));
    step = static_cast<Eigen::Index>(std::floor(seg_len * (1.0 - opts.welch_overlap)));
    segments = opts.welch_segments;
    if (seg_len < 2 || step < 1) throw InvalidInput("welch: series too short for segmentation");
    s.meta.segments = segments;
    s.meta.overlap = opts.welch_overlap;
  }

  const Eigen::Index bins = seg_len / 2;
  const double d_omega = 2.0 * pi / (static_cast<double>(seg_len) * dt);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(bins + 1);
  for (int j = 0; j < segments; ++j) {
    const auto first = x.begin() + static_cast<std::ptrdiff_t>(j * step);
    const std::vector<double> seg(first, first + seg_len);
    const auto spec = half_spectrum(seg);
    for (Eigen::Index k = 0; k <= bins; ++k) acc(k) += std::norm(spec[static_cast<std::size_t>(k)]);
  }
  acc *= dt * dt / segments;
  if (ts.sampling == Sampling::interval_average) {
    for (Eigen::Index k = 1; k <= bins; ++k) {
      const double half = 0.5 * k * d_omega * dt;
      const double sinc = std::sin(half) / half;
      acc(k) /= sinc * sinc;
    }
  }
  s.dc_power = acc(0);
  s.omega = Eigen::VectorXd::LinSpaced(bins, d_omega, bins * d_omega);
  s.power = acc.tail(bins);
  s.meta.t_max = static_cast<double>(seg_len) * dt;
  s.meta.normalization = opts.normalization;

  double scale = 1.0;
  switch (opts.normalization) {
    case Normalization::mean_square:
      scale = 1.0 / (2.0 * pi * s.meta.t_max);
      break;
    case Normalization::unit_weight: {
      const double w = s.norm_total();
      if (!(w > 0.0)) throw DegenerateInput("psd_from_timeseries: zero weight, cannot normalize");
      scale = 1.0 / w;
      break;
    }
    case Normalization::reference:
      if (!(opts.reference_scale > 0.0) || !std::isfinite(opts.reference_scale)) {
        throw InvalidParameter("psd_from_timeseries: reference_scale must be finite and > 0");
      }
      scale = opts.reference_scale;
      break;
  }
  s.dc_power *= scale;
  s.power *= scale;
  s.meta.scale = scale;
  return s;
}

Spectrum mean_spectrum(std::span<const Spectrum> spectra) {
  if (spectra.empty()) throw InvalidInput("mean_spectrum: no spectra");
  Spectrum out = spectra.front();
  for (std::size_t i = 1; i < spectra.size(); ++i) {
    const Spectrum& s = spectra[i];
    if (s.size() != out.size() || !s.omega.isApprox(out.omega, 1e-12) ||
        s.lines.size() != out.lines.size()) {
      throw InvalidInput("mean_spectrum: spectra do not share a grid");
    }
    out.power += s.power;
    out.dc_power += s.dc_power;
    for (std::size_t k = 0; k < out.lines.size(); ++k) out.lines[k].weight += s.lines[k].weight;
  }
  const auto n = static_cast<double>(spectra.size());
  out.power /= n;
  out.dc_power /= n;
  for (auto& line : out.lines) line.weight /= n;
  out.meta.segments *= static_cast<int>(spectra.size());
  out.meta.note = "mean of " + std::to_string(spectra.size()) + " spectra";
  return out;
}

Eigen::VectorXd log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0 && hi > lo) || per_decade < 1) {
    throw InvalidParameter("log_grid: need 0 < lo < hi and per_decade >= 1");
  }
  const double decades = std::log10(hi / lo);
  const auto n = static_cast<Eigen::Index>(std::ceil(decades * per_decade - 1e-9)) + 1;
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i) = lo * std::pow(10.0, static_cast<double>(i) / per_decade);
  }
  return g;
}

double integrate_power(const Spectrum& s, double a, double b) {
  if (s.size() == 0 || b <= a) return 0.0;
  const auto cum = cumulative(s);
  return primitive(s, cum, b) - primitive(s, cum, a);
}

Spectrum aggregate(std::span<const Spectrum> spectra, const Eigen::VectorXd& grid) {
  if (spectra.empty()) throw InvalidInput("aggregate: no spectra");
  const Eigen::Index n = grid.size();
  if (n < 2) throw InvalidInput("aggregate: grid needs at least 2 points");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(grid(i) > grid(i - 1)) || !(grid(0) > 0.0)) {
      throw InvalidInput("aggregate: grid must be positive and strictly ascending");
    }
  }

  // Cell edges at geometric midpoints; outer edges mirror the first/last gap.
  Eigen::VectorXd edges(n + 1);
  for (Eigen::Index i = 1; i < n; ++i) edges(i) = std::sqrt(grid(i - 1) * grid(i));
  edges(0) = grid(0) * grid(0) / edges(1);
  edges(n) = grid(n - 1) * grid(n - 1) / edges(n - 1);

  Spectrum out;
  out.omega = grid;
  out.power = Eigen::VectorXd::Zero(n);
  out.meta.estimator = spectra.front().meta.estimator;
  out.meta.note = "aggregate of " + std::to_string(spectra.size()) + " spectra";

  // Per-bin contributions are summed in sorted order so the result does not
  // depend on the order of the members.
  const auto m = static_cast<Eigen::Index>(spectra.size());
  Eigen::MatrixXd parts(m, n);
  Eigen::Index row = 0;
  for (const Spectrum& member : spectra) {
    if (member.size() < 2) throw InvalidInput("aggregate: member spectrum has < 2 points");
    const double lo = member.omega(0);
    const double hi = member.omega(member.size() - 1);
    const PowerLaw low_tail = fit_power_law(member, lo, 10.0 * lo);
    const PowerLaw high_tail = fit_power_law(member, 0.1 * hi, hi);
    const auto cum = cumulative(member);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = edges(i);
      const double b = edges(i + 1);
      double w = 0.0;
      if (a < lo) w += low_tail.integral(a, std::min(b, lo));
      if (b > hi) w += high_tail.integral(std::max(a, hi), b);
      const double ia = std::clamp(a, lo, hi);
      const double ib = std::clamp(b, lo, hi);
      if (ib > ia) w += primitive(member, cum, ib) - primitive(member, cum, ia);
      parts(row, i) = w / (b - a);
    }
    ++row;
    out.lines.insert(out.lines.end(), member.lines.begin(), member.lines.end());
    out.meta.clipped_weight += member.meta.clipped_weight;
  }
  std::vector<double> column(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) column[static_cast<std::size_t>(k)] = parts(k, i);
    std::sort(column.begin(), column.end());
    double total = 0.0;
    for (double v : column) total += v;
    out.power(i) = total;
  }
  std::sort(out.lines.begin(), out.lines.end(), [](const SpectralLine& a, const SpectralLine& b) {
    return a.omega != b.omega ? a.omega < b.omega : a.weight < b.weight;
  });
  return out;
}

double band_weight(const Spectrum& s, double omega_lo, double omega_hi) {
  if (s.size() == 0) throw InvalidInput("band_weight: empty spectrum");
  const double top = s.omega(s.size() - 1);
  if (!(omega_lo >= 0.0) || omega_hi < omega_lo || omega_hi > top * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "band_weight: band [" << omega_lo << ", " << omega_hi << "] outside [0, " << top << "]";
    throw InvalidInput(os.str());
  }
  if (omega_hi == omega_lo) return 0.0;
  double w = integrate_power(s, std::max(omega_lo, s.omega(0)), omega_hi);
  for (const auto& line : s.lines) {
    if (line.omega >= omega_lo && line.omega <= omega_hi) w += line.weight;
  }
  return 2.0 * w;
}

double empirical_redistribution(const Spectrum& driven, const Spectrum& undriven,
                                double omega_cut) {
  const double base = band_weight(undriven, 0.0, omega_cut);
  if (!(std::abs(base) > 1e-300)) {
    throw DegenerateInput("empirical_redistribution: undriven band weight is zero");
  }
  return 1.0 - band_weight(driven, 0.0, omega_cut) / base;
}

Spectrum rasterize(const std::function<double(double)>& density, const Eigen::VectorXd& grid,
                   std::vector<SpectralLine> lines) {
  Spectrum s;
  s.omega = grid;
  s.power = grid.unaryExpr([&](double w) { return density(w); });
  s.dc_power = density(0.0);
  s.lines = std::move(lines);
  s.meta.note = "analytic";
  return s;
}

double loglog_slope(const Spectrum& s, double lo, double hi) {
  const PowerLaw fit = fit_power_law(s, lo, hi);
  if (fit.amplitude == 0.0) throw InvalidInput("loglog_slope: no positive points in range");
  return fit.exponent;
}

void write_csv(std::ostream& os, const Spectrum& s) {
  char buf[64];
  os << "# estimator=" << to_string(s.meta.estimator);
  std::snprintf(buf, sizeof buf, "%.8e", s.meta.fs);
  os << " fs=" << buf;
  std::snprintf(buf, sizeof buf, "%.8e", s.meta.t_max);
  os << " t_max=" << buf << " normalization=" << to_string(s.meta.normalization);
  std::snprintf(buf, sizeof buf, "%.8e", s.meta.scale);
  os << " scale=" << buf << " segments=" << s.meta.segments;
  std::snprintf(buf, sizeof buf, "%.8e", s.meta.overlap);
  os << " overlap=" << buf << " detrended=" << (s.meta.detrended ? 1 : 0);
  std::snprintf(buf, sizeof buf, "%.8e", s.meta.clipped_weight);
  os << " clipped_weight=" << buf;
  std::snprintf(buf, sizeof buf, "%.8e", s.norm_total());
  os << " norm_total=" << buf << '\n';
  if (s.has_dc()) {
    std::snprintf(buf, sizeof buf, "%.8e", s.dc_power);
    os << "# dc_power=" << buf << '\n';
  }
  if (!s.meta.note.empty()) os << "# note=" << s.meta.note << '\n';
  for (const auto& line : s.lines) {
    char w[64];
    std::snprintf(buf, sizeof buf, "%.8e", line.omega);
    std::snprintf(w, sizeof w, "%.8e", line.weight);
    os << "# line omega=" << buf << " weight=" << w << '\n';
  }
  os << "omega,power\n";
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    char p[64];
    std::snprintf(buf, sizeof buf, "%.8e", s.omega(i));
    std::snprintf(p, sizeof p, "%.8e", s.power(i));
    os << buf << ',' << p << '\n';
  }
}

}  // namespace tlsnoise
