#include "tlsnoise/classical_sr.hpp"
#include "tlsnoise/errors.hpp"
#include "tlsnoise/spectrum.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace tlsnoise;
using classical::ClassicalTls;

namespace {

// Closed-form solution of ds/dt = -W s + dW + A cos(wd t).
double rate_ode_exact(const ClassicalTls& c, double s0, double t) {
  const double w = c.w_total;
  const double wd = c.drive_freq;
  const double decay = std::exp(-w * t);
  return s0 * decay + c.dw / w * (1.0 - decay) +
         c.drive_amp * (w * std::cos(wd * t) + wd * std::sin(wd * t) - w * decay) /
             (w * w + wd * wd);
}

// Two-sided Lorentzian weight on a <= |omega| <= b.
double lorentzian_band(double w, double a, double b) {
  return 2.0 / std::numbers::pi * (std::atan(b / w) - std::atan(a / w));
}

}  // namespace

TEST_CASE("redistribution ratio follows (A^2/2)/(W^2 + wd^2)") {
  const ClassicalTls c{1.0, 0.0, 0.3, 10.0};
  CHECK(classical::redistribution_ratio(c).value == doctest::Approx(0.045 / 101.0).epsilon(1e-12));
  CHECK(classical::redistribution_ratio(c).in_range);
  CHECK(classical::redistribution_ratio({1.0, 0.0, 0.0, 10.0}).value == 0.0);
}

TEST_CASE("weak-drive PSD conserves weight and flags R > 1") {
  const ClassicalTls c{1.0, 0.2, 0.8, 3.0};
  const auto psd = classical::driven_psd_weak(c);
  CHECK(psd.total_weight() == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(psd.lines.size() == 1);
  CHECK(psd.lines[0].omega == 3.0);
  CHECK(psd.background(0.0) ==
        doctest::Approx((1.0 - classical::redistribution_ratio(c).value) / std::numbers::pi));
  CHECK_THROWS_AS(classical::driven_psd_weak({1.0, 0.0, 2.0, 0.0}), OutOfValidity);
}

TEST_CASE("Lorentzian integrates to one") {
  const ClassicalTls c{2.0, 0.0, 0.0, 0.0};
  // Simpson on omega = 2 tan(u), u in [0, pi/2): the integrand becomes 1/pi.
  const int n = 2000;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = (std::numbers::pi / 2.0) * i / n * (1.0 - 1e-12);
    const double w = 2.0 * std::tan(u);
    const double jac = 2.0 / (std::cos(u) * std::cos(u));
    const double f = classical::lorentzian_psd(c, w) * jac;
    sum += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  CHECK(2.0 * sum * (std::numbers::pi / 2.0) / n / 3.0 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("rate ODE matches the closed-form solution") {
  for (const ClassicalTls c : {ClassicalTls{1.0, 0.3, 0.5, 10.0}, ClassicalTls{0.2, 0.0, 0.1, 0.7},
                               ClassicalTls{5.0, -1.0, 2.0, 40.0}}) {
    const TimeSeries ts = classical::rate_ode_trajectory(c, 0.4, 20.0, 10.0);
    double err = 0.0;
    for (Eigen::Index k = 0; k < ts.size(); ++k) {
      err = std::max(err, std::abs(ts.values(k) - rate_ode_exact(c, 0.4, ts.time(k))));
    }
    CHECK(err < 1e-7);
  }
  CHECK_THROWS_AS(classical::rate_ode_trajectory({1.0, 0.0, 0.5, 100.0}, 0.0, 10.0, 1.0, 1),
                  StabilityViolation);
}

TEST_CASE("telegraph sampler is deterministic per seed") {
  const ClassicalTls c{1.0, 0.0, 0.5, 10.0};
  const TimeSeries a = classical::telegraph_sample(c, 42, 64.0, 100.0);
  const TimeSeries b = classical::telegraph_sample(c, 42, 64.0, 100.0);
  const TimeSeries d = classical::telegraph_sample(c, 43, 64.0, 100.0);
  CHECK(a.values == b.values);
  CHECK(a.values != d.values);
  CHECK((a.values.array().abs() == 1.0).all());
}

TEST_CASE("telegraph sampler rejects negative rates and coarse steps") {
  CHECK_THROWS_AS(classical::telegraph_sample({1.0, 0.0, 2.0, 10.0}, 1, 64.0, 10.0),
                  InvalidParameter);
  CHECK_THROWS_AS(classical::telegraph_sample({1.0, 0.0, 0.0, 0.0}, 1, 10.0, 10.0),
                  InvalidParameter);
}

TEST_CASE("undriven telegraph dwell time is 2/W") {
  const ClassicalTls c{1.0, 0.0, 0.0, 0.0};
  const TimeSeries ts = classical::telegraph_sample(c, 7, 100.0, 20000.0);
  int flips = 0;
  for (Eigen::Index k = 1; k < ts.size(); ++k) flips += ts.values(k) != ts.values(k - 1);
  const double dwell = ts.t_max / flips;
  CHECK(dwell == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("undriven telegraph spectrum is the Lorentzian within 5%") {
  const ClassicalTls c{1.0, 0.0, 0.0, 0.0};
  PsdOptions o;
  o.estimator = Estimator::welch;
  o.welch_overlap = 0.0;
  o.welch_segments = 16;
  std::vector<Spectrum> runs;
  for (int s = 0; s < 60; ++s) {
    runs.push_back(psd_from_timeseries(classical::telegraph_sample(c, 100 + s, 32.0, 4096.0), o));
  }
  const Spectrum mean = mean_spectrum(runs);
  CHECK(mean.norm_total() == doctest::Approx(1.0).epsilon(0.05));
  for (const auto& [a, b] : {std::pair{0.1, 0.5}, {0.5, 1.0}, {1.0, 2.0}, {2.0, 5.0}}) {
    CAPTURE(a);
    CHECK(band_weight(mean, a, b) == doctest::Approx(lorentzian_band(1.0, a, b)).epsilon(0.05));
  }
}

TEST_CASE("ensemble mean of driven telegraph runs follows the rate ODE") {
  const ClassicalTls c{1.0, 0.0, 0.8, 2.0};
  const double fs = 20.0;
  const double t_max = 20.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fs * t_max));
  const int seeds = 4000;
  for (int s = 0; s < seeds; ++s) mean += classical::telegraph_sample(c, 1000 + s, fs, t_max).values;
  mean /= seeds;
  double sq = 0.0;
  int n = 0;
  for (Eigen::Index k = static_cast<Eigen::Index>(5 * fs); k < mean.size(); ++k, ++n) {
    const double d = mean(k) - rate_ode_exact(c, 0.0, k / fs);
    sq += d * d;
  }
  // Per-point Monte Carlo error is about 1/sqrt(4000) = 0.016; the periodic
  // mean itself has amplitude 0.36.
  CHECK(std::sqrt(sq / n) < 0.03);
}
