#include "tlsnoise/errors.hpp"
#include "tlsnoise/spectrum.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

using namespace tlsnoise;
using std::numbers::pi;

namespace {

TimeSeries make_series(double fs, double t_max, double (*f)(double)) {
  TimeSeries ts;
  ts.fs = fs;
  ts.t_max = t_max;
  ts.values.resize(sample_count(fs, t_max));
  for (Eigen::Index k = 0; k < ts.size(); ++k) ts.values(k) = f(ts.time(k));
  return ts;
}

double decay2(double t) { return std::exp(-2.0 * t); }
double tone10(double t) { return std::cos(10.0 * t); }

// Two-sided unit Lorentzian of half-width w.
Spectrum lorentzian(double w, const Eigen::VectorXd& grid) {
  return rasterize([w](double x) { return w / pi / (w * w + x * x); }, grid);
}

bool smooth(Eigen::Index n) {
  for (int p : {2, 3, 5}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

}  // namespace

TEST_CASE("correlation estimator of exp(-2t) is the unit Lorentzian") {
  PsdOptions o;
  o.estimator = Estimator::correlation;
  const Spectrum s = psd_from_timeseries(make_series(1e4, 100.0, decay2), o);
  CHECK(s.norm_total() == doctest::Approx(1.0).epsilon(0.02));
  for (double w : {0.5, 2.0, 10.0}) {
    const Eigen::Index k = static_cast<Eigen::Index>(std::lround(w / s.omega(0))) - 1;
    CAPTURE(w);
    CHECK(s.power(k) == doctest::Approx(2.0 / pi / (4.0 + s.omega(k) * s.omega(k))).epsilon(0.02));
  }
}

TEST_CASE("periodogram of exp(-2t) has Lorentzian shape and a separate DC bin") {
  const Spectrum s = psd_from_timeseries(make_series(1e4, 100.0, decay2));
  REQUIRE(s.has_dc());
  CHECK(s.omega(0) == doctest::Approx(2.0 * pi / 100.0));
  const double dw = s.omega(1) - s.omega(0);
  CHECK(dw == doctest::Approx(2.0 * pi / 100.0));
  CHECK(s.omega(s.size() - 1) == doctest::Approx(pi * 1e4));
  for (double w : {0.5, 2.0, 10.0}) {
    const Eigen::Index k = static_cast<Eigen::Index>(std::lround(w / s.omega(0))) - 1;
    const double expect = 1.0 / (4.0 + s.omega(k) * s.omega(k)) / (2.0 * pi * 100.0);
    CAPTURE(w);
    CHECK(s.power(k) == doctest::Approx(expect).epsilon(0.01));
  }
  CHECK((s.power.array() >= 0.0).all());
}

TEST_CASE("a sinusoid gives a single leakage-limited line") {
  const Spectrum s = psd_from_timeseries(make_series(100.0, 62.8, tone10));
  Eigen::Index peak = 0;
  s.power.maxCoeff(&peak);
  CHECK(std::abs(s.omega(peak) - 10.0) <= s.omega(0));
  CHECK(s.power(peak) > 100.0 * s.power(peak + 20));
}

TEST_CASE("Parseval: white noise weight equals its mean square") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.3);
  TimeSeries ts;
  ts.fs = 100.0;
  ts.t_max = 1000.0;
  ts.values.resize(100000);
  for (Eigen::Index k = 0; k < ts.size(); ++k) ts.values(k) = g(rng);
  const double ms = ts.values.squaredNorm() / static_cast<double>(ts.size());
  CHECK(psd_from_timeseries(ts).norm_total() == doctest::Approx(ms).epsilon(0.02));
}

TEST_CASE("power scales quadratically with the signal") {
  TimeSeries ts = make_series(1e3, 10.0, decay2);
  const Spectrum a = psd_from_timeseries(ts);
  ts.values *= 3.0;
  const Spectrum b = psd_from_timeseries(ts);
  CHECK((b.power - 9.0 * a.power).cwiseAbs().maxCoeff() < 1e-12 * b.power.maxCoeff());
  const Spectrum c = psd_from_timeseries(ts);
  CHECK(b.power == c.power);
}

TEST_CASE("unit-weight and reference normalisation") {
  const TimeSeries ts = make_series(1e3, 10.0, decay2);
  PsdOptions o;
  o.normalization = Normalization::unit_weight;
  const Spectrum u = psd_from_timeseries(ts, o);
  CHECK(u.norm_total() == doctest::Approx(1.0).epsilon(1e-12));
  o.normalization = Normalization::reference;
  o.reference_scale = u.meta.scale;
  const Spectrum r = psd_from_timeseries(ts, o);
  CHECK(r.power == u.power);
  o.reference_scale = -1.0;
  CHECK_THROWS_AS(psd_from_timeseries(ts, o), InvalidParameter);
}

TEST_CASE("Welch averaging records its segmentation") {
  PsdOptions o;
  o.estimator = Estimator::welch;
  const Spectrum s = psd_from_timeseries(make_series(1e3, 10.0, decay2), o);
  CHECK(s.meta.segments == 8);
  CHECK(s.meta.overlap == 0.5);
  CHECK(s.meta.t_max < 10.0);
}

TEST_CASE("bad series are rejected") {
  TimeSeries ts;
  ts.fs = 10.0;
  ts.t_max = 0.1;
  ts.values.resize(1);
  CHECK_THROWS_AS(psd_from_timeseries(ts), InvalidInput);
}

TEST_CASE("band weight of a Lorentzian follows the arctan integral") {
  const Spectrum s = lorentzian(2.0, Eigen::VectorXd::LinSpaced(400000, 1e-3, 400.0));
  CHECK(band_weight(s, 0.0, 2.0) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(band_weight(s, 1.0, 6.0) ==
        doctest::Approx(2.0 / pi * (std::atan(3.0) - std::atan(0.5))).epsilon(1e-4));
  CHECK(band_weight(s, 3.0, 3.0) == 0.0);
  CHECK(s.norm_total() == doctest::Approx(1.0).epsilon(5e-3));
  CHECK_THROWS_AS(band_weight(s, 1.0, 1e4), InvalidInput);
  CHECK_THROWS_AS(band_weight(s, 2.0, 1.0), InvalidInput);
}

TEST_CASE("lines count towards band weights") {
  Spectrum s = lorentzian(1.0, Eigen::VectorXd::LinSpaced(1000, 0.01, 10.0));
  s.lines.push_back({5.0, 0.1});
  const double without = band_weight(lorentzian(1.0, s.omega), 4.0, 6.0);
  CHECK(band_weight(s, 4.0, 6.0) == doctest::Approx(without + 0.2));
}

TEST_CASE("empirical redistribution") {
  const Spectrum u = lorentzian(1.0, Eigen::VectorXd::LinSpaced(10000, 1e-3, 10.0));
  CHECK(empirical_redistribution(u, u, 5.0) == 0.0);
  Spectrum d = u;
  d.power *= 0.7;
  CHECK(empirical_redistribution(d, u, 5.0) == doctest::Approx(0.3));
  Spectrum zero = u;
  zero.power.setZero();
  CHECK_THROWS_AS(empirical_redistribution(u, zero, 5.0), DegenerateInput);
}

TEST_CASE("aggregate conserves band weights and is linear") {
  const Spectrum s = lorentzian(0.5, Eigen::VectorXd::LinSpaced(20000, 1e-3, 20.0));
  const Eigen::VectorXd grid = log_grid(1e-3, 20.0, 200);
  const std::vector<Spectrum> one{s};
  const Spectrum a = aggregate(one, grid);
  for (const auto& [lo, hi] : {std::pair{0.01, 0.1}, {0.1, 1.0}, {1.0, 10.0}}) {
    CAPTURE(lo);
    CHECK(band_weight(a, lo, hi) == doctest::Approx(band_weight(s, lo, hi)).epsilon(0.01));
  }
  const std::vector<Spectrum> two{s, s};
  const Spectrum b = aggregate(two, grid);
  CHECK((b.power - 2.0 * a.power).cwiseAbs().maxCoeff() < 1e-12 * b.power.maxCoeff());
  CHECK_THROWS_AS(aggregate(std::vector<Spectrum>{}, grid), InvalidInput);
}

TEST_CASE("seven Lorentzians one per decade give a 1/f slope") {
  std::vector<Spectrum> members;
  Eigen::VectorXd fine(2001);
  for (int i = 0; i <= 2000; ++i) fine(i) = std::pow(10.0, -8.0 + 10.0 * i / 2000.0);
  for (int e = -6; e <= 0; ++e) members.push_back(lorentzian(2.0 * std::pow(10.0, e), fine));
  const Spectrum total = aggregate(members, log_grid(1e-7, 10.0, 200));
  const double slope = loglog_slope(total, 1e-5, 1e-1);
  CHECK(slope > -1.15);
  CHECK(slope < -0.85);
  CHECK(total.norm_total() == doctest::Approx(7.0).epsilon(0.05));
}

TEST_CASE("mean spectrum averages pointwise and needs a shared grid") {
  const Spectrum a = lorentzian(1.0, Eigen::VectorXd::LinSpaced(100, 0.1, 10.0));
  Spectrum b = a;
  b.power *= 3.0;
  const std::vector<Spectrum> both{a, b};
  const Spectrum m = mean_spectrum(both);
  CHECK((m.power - 2.0 * a.power).cwiseAbs().maxCoeff() < 1e-15);
  const std::vector<Spectrum> clash{a, lorentzian(1.0, Eigen::VectorXd::LinSpaced(50, 0.1, 10.0))};
  CHECK_THROWS_AS(mean_spectrum(clash), InvalidInput);
}

TEST_CASE("smooth sizes") {
  CHECK(smooth_size_below(1000) == 1000);
  CHECK(smooth_size_below(1009) == 1000);
  for (Eigen::Index n : {7, 97, 1021, 65537, 999983}) {
    const Eigen::Index m = smooth_size_below(n);
    CHECK(m <= n);
    CHECK(smooth(m));
    for (Eigen::Index k = m + 1; k <= n; ++k) REQUIRE_FALSE(smooth(k));
  }
}

TEST_CASE("CSV export carries metadata") {
  const Spectrum s = psd_from_timeseries(make_series(1e3, 1.0, decay2));
  std::ostringstream os;
  write_csv(os, s);
  const std::string text = os.str();
  CHECK(text.rfind("# estimator=periodogram", 0) == 0);
  CHECK(text.find("omega,power") != std::string::npos);
  CHECK(text.find("e-") != std::string::npos);
}
