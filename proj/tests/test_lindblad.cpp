#include "tlsnoise/errors.hpp"
#include "tlsnoise/lindblad.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace tlsnoise;

namespace {

double max_abs_diff(const TimeSeries& a, const TimeSeries& b) {
  return (a.values - b.values).cwiseAbs().maxCoeff();
}

// Plain RK4 on the density matrix, independent of the library's stepping.
Eigen::Matrix2cd rk4_rho(Eigen::Matrix2cd rho, double t0, double t1, int steps,
                         const TlsParams& p, const DriveParams& d) {
  const double h = (t1 - t0) / steps;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    const Eigen::Matrix2cd k1 = lindblad_rhs(rho, t, p, d);
    const Eigen::Matrix2cd k2 = lindblad_rhs(rho + 0.5 * h * k1, t + 0.5 * h, p, d);
    const Eigen::Matrix2cd k3 = lindblad_rhs(rho + 0.5 * h * k2, t + 0.5 * h, p, d);
    const Eigen::Matrix2cd k4 = lindblad_rhs(rho + h * k3, t + h, p, d);
    rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return rho;
}

}  // namespace

TEST_CASE("rate parametrisation") {
  const TlsParams p = TlsParams::from_total(2.0, 1.0, 0.5, 3.0, 0.0);
  CHECK(p.gamma_relax == doctest::Approx(2.5));
  CHECK(p.kappa_excite == doctest::Approx(1.5));
  CHECK(p.gamma_total() == doctest::Approx(2.0));
  CHECK(p.lambda() == doctest::Approx(1.0));
  CHECK_THROWS_AS(TlsParams::from_total(1.0, 3.0, 1.0), InvalidParameter);
  CHECK_THROWS_AS(TlsParams::from_total(-1.0, 0.0, 1.0), InvalidParameter);
}

TEST_CASE("detailed balance") {
  CHECK(detailed_balance_lambda(1.0, 2.0, 0.5) == doctest::Approx(2.0 * std::tanh(2.0)));
  CHECK(detailed_balance_lambda(1.0, 0.0, 0.5) == 0.0);
  CHECK(std::abs(detailed_balance_lambda(1.0, 1e-3, 1e4)) < 1e-6);
  const TlsParams p = TlsParams::thermal(1.0, 1.0, 2.0, 0.0, 0.5);
  CHECK(p.lambda() == doctest::Approx(2.0 * std::tanh(2.0)));
}

TEST_CASE("undriven relaxation from |0> is exponential at 2 Gamma") {
  const TlsParams p = TlsParams::from_total(1.5, 0.6, 0.7);
  IntegratorOptions o;
  o.step_bound = 0.02;
  const TimeSeries ts = integrate(p, {}, BlochState::ground(), 100.0, 5.0, o);
  const double inf = p.lambda() / (2.0 * p.gamma_total());
  double err = 0.0;
  for (Eigen::Index k = 0; k < ts.size(); ++k) {
    const double exact = inf + (1.0 - inf) * std::exp(-2.0 * p.gamma_total() * ts.time(k));
    err = std::max(err, std::abs(ts.values(k) - exact));
  }
  CHECK(err < 1e-9);
}

TEST_CASE("Bloch derivatives equal the projected Lindblad right-hand side") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const TlsParams p = TlsParams::from_total(1.0 + u(rng) * 0.5, 0.3 * u(rng), 1.0 + u(rng),
                                              3.0 * u(rng), 2.0 * u(rng));
    const DriveParams d{5.0 * std::abs(u(rng)), 5.0 * std::abs(u(rng)), 3.0};
    Bloch<double> v(u(rng), u(rng), u(rng));
    v *= 0.9 / v.norm();
    const double t = 2.0 * std::abs(u(rng));
    const Bloch<double> direct = derivatives<double>(v, t, p, d);
    const Bloch<double> via_rho = bloch_vector(lindblad_rhs(density_matrix(v), t, p, d));
    CHECK((direct - via_rho).norm() < 1e-12);
  }
}

TEST_CASE("density matrix and Bloch vector round trip") {
  const Bloch<double> v(0.3, -0.4, 0.5);
  CHECK((bloch_vector(density_matrix(v)) - v).norm() < 1e-15);
  const Eigen::Matrix2cd rho = density_matrix(v);
  CHECK(std::abs(rho.trace() - 1.0) < 1e-15);
  CHECK((rho - rho.adjoint()).norm() < 1e-15);
}

TEST_CASE("oracle propagator keeps trace, Hermiticity and positivity") {
  const TlsParams p = TlsParams::from_total(1.0, 0.4, 2.0, 1.0, 0.5);
  const DriveParams d{50.0, 25.0, 7.0};
  Eigen::Matrix2cd rho = density_matrix(Bloch<double>(1.0, 0.0, 0.0));
  for (int block = 0; block < 40; ++block) {
    rho = rk4_rho(rho, 0.05 * block, 0.05 * (block + 1), 100, p, d);
    CHECK(std::abs(rho.trace() - 1.0) < 1e-10);
    CHECK((rho - rho.adjoint()).norm() < 1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * (rho + rho.adjoint()));
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("Bloch integrator agrees with the full density matrix propagator") {
  const TlsParams p = TlsParams::from_total(1.0, 0.2, 1.0, 0.5, 0.8);
  const DriveParams d{100.0, 50.0, 10.0};
  const TimeSeries a = integrate(p, d, BlochState::ground(), 200.0, 5.0);
  const TimeSeries b = integrate_full_density_matrix(p, d, BlochState::ground(), 200.0, 5.0);
  CHECK(max_abs_diff(a, b) < 1e-9);
}

TEST_CASE("Bloch vector stays inside the unit ball") {
  const TlsParams p = TlsParams::from_total(1.0, 0.5, 0.2, 0.0, 1.0);
  const DriveParams d{20.0, 10.0, 4.0};
  BlochState s = BlochState::ground();
  const double h = 1e-3;
  for (int i = 0; i < 5000; ++i) {
    const Bloch<double> k1 = derivatives<double>(s.v, s.t, p, d);
    const Bloch<double> k2 = derivatives<double>(s.v + 0.5 * h * k1, s.t + 0.5 * h, p, d);
    const Bloch<double> k3 = derivatives<double>(s.v + 0.5 * h * k2, s.t + 0.5 * h, p, d);
    const Bloch<double> k4 = derivatives<double>(s.v + h * k3, s.t + h, p, d);
    s.v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    s.t += h;
    REQUIRE(s.v.norm() <= 1.0 + 1e-9);
  }
}

TEST_CASE("RK4 converges at fourth order") {
  const TlsParams p = TlsParams::from_total(1.0, 0.0, 1.0, 1.0, 0.5);
  const DriveParams d{5.0, 2.5, 3.0};
  IntegratorOptions fine;
  fine.substeps = 1024;
  const TimeSeries ref = integrate(p, d, BlochState::ground(), 2.0, 2.0, fine);
  std::vector<double> errs;
  for (int sub : {16, 32, 64}) {
    IntegratorOptions o;
    o.substeps = sub;
    o.step_bound = 10.0;
    errs.push_back(max_abs_diff(integrate(p, d, BlochState::ground(), 2.0, 2.0, o), ref));
  }
  for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
    const double order = std::log2(errs[i] / errs[i + 1]);
    CAPTURE(order);
    CHECK(order > 3.7);
    CHECK(order < 4.3);
  }
}

TEST_CASE("forced coarse steps are refused") {
  const TlsParams p = TlsParams::from_total(1.0, 0.0, 1.0);
  IntegratorOptions o;
  o.substeps = 1;
  CHECK_THROWS_AS(integrate(p, {1000.0, 500.0, 10.0}, BlochState::ground(), 100.0, 1.0, o),
                  StabilityViolation);
}

TEST_CASE("one-period map reproduces interval averages of direct integration") {
  const TlsParams p = TlsParams::from_total(1.0, 0.0, 1.0);
  const DriveParams d{30.0, 15.0, 2.0 * std::numbers::pi};  // period 1
  const TimeSeries avg = integrate_averaged(p, d, BlochState::ground(), 1.0, 20.0);
  const TimeSeries direct = integrate(p, d, BlochState::ground(), 4000.0, 20.0);
  REQUIRE(avg.sampling == Sampling::interval_average);
  const Eigen::Index per = direct.size() / avg.size();
  REQUIRE(per * avg.size() == direct.size());
  double err = 0.0;
  for (Eigen::Index k = 0; k < avg.size(); ++k) {
    // Trapezoid over the interval from the direct samples.
    const Eigen::Index a = k * per;
    double sum = 0.0;
    for (Eigen::Index j = 0; j < per; ++j) {
      const double v0 = direct.values(a + j);
      const double v1 = a + j + 1 < direct.size() ? direct.values(a + j + 1) : v0;
      sum += 0.5 * (v0 + v1);
    }
    if (k + 1 < avg.size()) err = std::max(err, std::abs(sum / per - avg.values(k)));
  }
  CHECK(err < 1e-4);
}
