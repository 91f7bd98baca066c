#include "tlsnoise/lindblad.hpp"

#include "tlsnoise/errors.hpp"

#include <algorithm>
#include <array>
#include <complex>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

namespace tlsnoise {

using detail::require;

void TlsParams::validate() const {
  require(std::isfinite(epsilon) && std::isfinite(delta), "TLS: epsilon and delta must be finite");
  require(gamma_relax >= 0.0 && kappa_excite >= 0.0 && eta >= 0.0,
          "TLS: gamma, kappa and eta must be >= 0");
  require(gamma_total() > 0.0, "TLS: Gamma = (gamma + kappa)/2 must be > 0");
}

TlsParams TlsParams::from_total(double gamma_total, double lambda, double eta, double epsilon,
                                double delta) {
  require(gamma_total > 0.0, "TLS: Gamma must be > 0");
  require(std::abs(lambda) <= 2.0 * gamma_total * (1.0 + 1e-12), "TLS: |lambda| must be <= 2 Gamma");
  TlsParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.gamma_relax = std::max(0.0, gamma_total + 0.5 * lambda);
  p.kappa_excite = std::max(0.0, gamma_total - 0.5 * lambda);
  p.eta = eta;
  p.validate();
  return p;
}

TlsParams TlsParams::thermal(double gamma_total, double eta, double epsilon, double delta,
                             double theta) {
  return from_total(gamma_total, detailed_balance_lambda(gamma_total, epsilon, theta), eta, epsilon,
                    delta);
}

void DriveParams::validate() const {
  require(alpha_z >= 0.0 && alpha_x >= 0.0, "drive: alpha_z and alpha_x must be >= 0");
  require(omega_d >= 0.0 && std::isfinite(omega_d), "drive: omega_d must be >= 0");
}

double detailed_balance_lambda(double gamma_total, double epsilon, double theta) {
  require(gamma_total > 0.0, "detailed balance: Gamma must be > 0");
  require(theta > 0.0, "detailed balance: temperature must be > 0");
  return 2.0 * gamma_total * std::tanh(epsilon / (2.0 * theta));
}

double theta_from_physical(double temperature_kelvin, double reference_rate_hz) {
  require(temperature_kelvin > 0.0, "temperature must be > 0 K");
  require(reference_rate_hz > 0.0, "reference rate must be > 0");
  constexpr double k_b = 1.380649e-23;       // J/K
  constexpr double hbar = 1.054571817e-34;  // J s
  return k_b * temperature_kelvin / hbar / reference_rate_hz;
}

namespace {

struct Scale {
  const char* name;
  double value;
};

Scale largest_scale(const TlsParams& params, const DriveParams& drive) {
  const double gamma = params.gamma_total();
  const std::array<Scale, 5> scales{{
      {"2*Gamma", 2.0 * gamma},
      {"Gamma+2*eta", gamma + 2.0 * params.eta},
      {"|epsilon|+2*alpha_z", std::abs(params.epsilon) + 2.0 * drive.alpha_z},
      {"|Delta|+2*alpha_x", std::abs(params.delta) + 2.0 * drive.alpha_x},
      {"omega_d", drive.omega_d},
  }};
  return *std::max_element(scales.begin(), scales.end(),
                           [](const Scale& a, const Scale& b) { return a.value < b.value; });
}

// Steps per sample interval so that h * omega_max <= bound.
int choose_substeps(double interval, const TlsParams& params, const DriveParams& drive,
                    const IntegratorOptions& opts) {
  const Scale top = largest_scale(params, drive);
  if (opts.substeps > 0) {
    const double h = interval / opts.substeps;
    if (h * top.value > opts.step_bound) {
      std::ostringstream os;
      os << "integrator step " << h << " violates h*omega_max <= " << opts.step_bound
         << "; largest frequency scale is " << top.name << " = " << top.value;
      throw StabilityViolation(os.str());
    }
    return opts.substeps;
  }
  const double n = std::ceil(interval * top.value / opts.step_bound - 1e-9);
  const double steps = std::max(1.0, n);
  if (steps / interval > opts.max_step_rate) {
    std::ostringstream os;
    os << "integrator would need " << steps / interval << " steps per unit time (cap "
       << opts.max_step_rate << "); largest frequency scale is " << top.name << " = "
       << top.value;
    throw StabilityViolation(os.str());
  }
  return static_cast<int>(steps);
}

inline double drive_cos(const DriveParams& drive, double t) {
  return drive.omega_d == 0.0 ? 1.0 : std::cos(drive.omega_d * t);
}

// Coupled-equation right-hand side with the drive phase factor precomputed.
struct BlochRhs {
  double two_gamma, decay_pq, lambda, delta, epsilon, two_ax, two_az;

  BlochRhs(const TlsParams& p, const DriveParams& d)
      : two_gamma(2.0 * p.gamma_total()),
        decay_pq(p.gamma_total() + 2.0 * p.eta),
        lambda(p.lambda()),
        delta(p.delta),
        epsilon(p.epsilon),
        two_ax(2.0 * d.alpha_x),
        two_az(2.0 * d.alpha_z) {}

  Bloch<double> operator()(const Bloch<double>& x, double c) const {
    const double bx = delta + two_ax * c;
    const double bz = epsilon + two_az * c;
    return {-two_gamma * x(0) + lambda - bx * x(1), bx * x(0) - decay_pq * x(1) - bz * x(2),
            bz * x(1) - decay_pq * x(2)};
  }

  // Generator of the affine flow in homogeneous coordinates (s_z, p, q, 1).
  Eigen::Matrix4d generator(double c) const {
    const double bx = delta + two_ax * c;
    const double bz = epsilon + two_az * c;
    Eigen::Matrix4d g;
    g << -two_gamma, -bx, 0.0, lambda,  //
        bx, -decay_pq, -bz, 0.0,        //
        0.0, bz, -decay_pq, 0.0,        //
        0.0, 0.0, 0.0, 0.0;
    return g;
  }
};

TimeSeries make_series(std::int64_t n, double fs, double t_max, const BlochState& init) {
  TimeSeries ts;
  ts.values.resize(n);
  ts.fs = fs;
  ts.t_max = t_max;
  if (init.v.isApprox(BlochState::ground().v)) {
    ts.initial_state = "|0>";
  } else if (init.v.isApprox(BlochState::excited().v)) {
    ts.initial_state = "|1>";
  } else {
    std::ostringstream os;
    os << "(" << init.v(0) << "," << init.v(1) << "," << init.v(2) << ")";
    ts.initial_state = os.str();
  }
  return ts;
}

void check_common(const TlsParams& params, const DriveParams& drive, const BlochState& init) {
  params.validate();
  drive.validate();
  require(init.v.allFinite(), "initial Bloch state must be finite");
  require(init.v.squaredNorm() <= 1.0 + 1e-8, "initial Bloch vector must lie in the unit ball");
}

}  // namespace

double max_frequency(const TlsParams& params, const DriveParams& drive) {
  return largest_scale(params, drive).value;
}

TimeSeries integrate(const TlsParams& params, const DriveParams& drive, const BlochState& init,
                     double fs, double t_max, const IntegratorOptions& opts) {
  check_common(params, drive, init);
  const std::int64_t n = sample_count(fs, t_max);
  const int sub = choose_substeps(1.0 / fs, params, drive, opts);
  const double h = 1.0 / (fs * sub);
  const BlochRhs rhs(params, drive);

  TimeSeries ts = make_series(n, fs, t_max, init);
  Bloch<double> x = init.v;
  const double t0 = init.t;
  double c0 = drive_cos(drive, t0);
  for (std::int64_t k = 0; k < n; ++k) {
    ts.values(k) = x(0);
    for (int j = 0; j < sub; ++j) {
      const double t = t0 + (static_cast<double>(k) * sub + j) * h;
      const double ch = drive_cos(drive, t + 0.5 * h);
      const double c1 = drive_cos(drive, t + h);
      const Bloch<double> k1 = rhs(x, c0);
      const Bloch<double> k2 = rhs(x + 0.5 * h * k1, ch);
      const Bloch<double> k3 = rhs(x + 0.5 * h * k2, ch);
      const Bloch<double> k4 = rhs(x + h * k3, c1);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      c0 = c1;
    }
  }
  return ts;
}

Eigen::Matrix2cd density_matrix(const Bloch<double>& v) {
  using C = std::complex<double>;
  const double z = v(0);
  const double p = v(1);
  const double q = v(2);
  Eigen::Matrix2cd rho;
  rho << C(0.5 * (1.0 + z), 0.0), C(0.5 * q, 0.5 * p),  //
      C(0.5 * q, -0.5 * p), C(0.5 * (1.0 - z), 0.0);
  return rho;
}

Bloch<double> bloch_vector(const Eigen::Matrix2cd& rho) {
  const std::complex<double> diff = rho(0, 1) - rho(1, 0);
  return {(rho(0, 0) - rho(1, 1)).real(), (std::complex<double>(0.0, -1.0) * diff).real(),
          (rho(0, 1) + rho(1, 0)).real()};
}

Eigen::Matrix2cd lindblad_rhs(const Eigen::Matrix2cd& rho, double t, const TlsParams& params,
                              const DriveParams& drive) {
  using C = std::complex<double>;
  const C i(0.0, 1.0);
  const double c = drive_cos(drive, t);
  Eigen::Matrix2cd sx, sz, lower, raise;
  sx << 0.0, 1.0, 1.0, 0.0;
  sz << 1.0, 0.0, 0.0, -1.0;
  raise << 0.0, 1.0, 0.0, 0.0;  // |0><1|
  lower << 0.0, 0.0, 1.0, 0.0;  // |1><0|

  const Eigen::Matrix2cd h = 0.5 * (params.epsilon * sz + params.delta * sx) +
                             (drive.alpha_z * sz + drive.alpha_x * sx) * c;
  Eigen::Matrix2cd out = -i * (h * rho - rho * h);

  auto dissipate = [&](const Eigen::Matrix2cd& l, double rate) {
    if (rate == 0.0) return;
    const Eigen::Matrix2cd ld = l.adjoint();
    const Eigen::Matrix2cd ldl = ld * l;
    out += rate * (l * rho * ld - 0.5 * (ldl * rho + rho * ldl));
  };
  dissipate(raise, params.gamma_relax);
  dissipate(lower, params.kappa_excite);
  dissipate(sz, params.eta);
  return out;
}

TimeSeries integrate_full_density_matrix(const TlsParams& params, const DriveParams& drive,
                                         const BlochState& init, double fs, double t_max,
                                         const IntegratorOptions& opts) {
  check_common(params, drive, init);
  const std::int64_t n = sample_count(fs, t_max);
  const int sub = choose_substeps(1.0 / fs, params, drive, opts);
  const double h = 1.0 / (fs * sub);

  TimeSeries ts = make_series(n, fs, t_max, init);
  Eigen::Matrix2cd rho = density_matrix(init.v);
  for (std::int64_t k = 0; k < n; ++k) {
    ts.values(k) = (rho(0, 0) - rho(1, 1)).real();
    for (int j = 0; j < sub; ++j) {
      const double t = init.t + (static_cast<double>(k) * sub + j) * h;
      const Eigen::Matrix2cd k1 = lindblad_rhs(rho, t, params, drive);
      const Eigen::Matrix2cd k2 = lindblad_rhs(rho + 0.5 * h * k1, t + 0.5 * h, params, drive);
      const Eigen::Matrix2cd k3 = lindblad_rhs(rho + 0.5 * h * k2, t + 0.5 * h, params, drive);
      const Eigen::Matrix2cd k4 = lindblad_rhs(rho + h * k3, t + h, params, drive);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return ts;
}

namespace {

// Affine flow over [t0, t0 + span]: the state map and its time integral, both
// acting on homogeneous coordinates.
struct Segment {
  Eigen::Matrix4d map = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d integral = Eigen::Matrix4d::Zero();
};

Segment propagate_segment(const BlochRhs& rhs, const DriveParams& drive, double t0, double span,
                          int steps) {
  const double h = span / steps;
  Segment seg;
  Eigen::Matrix4d& x = seg.map;
  Eigen::Matrix4d dx0 = rhs.generator(drive_cos(drive, t0)) * x;
  for (int j = 0; j < steps; ++j) {
    const double t = t0 + j * h;
    const Eigen::Matrix4d gh = rhs.generator(drive_cos(drive, t + 0.5 * h));
    const Eigen::Matrix4d g1 = rhs.generator(drive_cos(drive, t + h));
    const Eigen::Matrix4d k1 = dx0;
    const Eigen::Matrix4d k2 = gh * (x + 0.5 * h * k1);
    const Eigen::Matrix4d k3 = gh * (x + 0.5 * h * k2);
    const Eigen::Matrix4d k4 = g1 * (x + h * k3);
    const Eigen::Matrix4d x1 = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const Eigen::Matrix4d dx1 = g1 * x1;
    // Cubic Hermite quadrature of the trajectory over the step.
    seg.integral += 0.5 * h * (x + x1) + (h * h / 12.0) * (dx0 - dx1);
    x = x1;
    dx0 = dx1;
  }
  return seg;
}

}  // namespace

TimeSeries integrate_averaged(const TlsParams& params, const DriveParams& drive,
                              const BlochState& init, double target_dt, double t_max,
                              const IntegratorOptions& opts) {
  check_common(params, drive, init);
  require(target_dt > 0.0 && t_max > target_dt, "integrate_averaged: need 0 < target_dt < t_max");
  const BlochRhs rhs(params, drive);
  const double omega_max = max_frequency(params, drive);
  auto steps_for = [&](double span) {
    return std::max(1, static_cast<int>(std::ceil(span * omega_max / opts.step_bound - 1e-9)));
  };

  // maps[j] advances sample j -> j+1 (cyclic); averages[j] yields the mean
  // over that interval divided by dt.
  std::vector<Eigen::Matrix4d> maps;
  std::vector<Eigen::Matrix4d> averages;
  double dt = target_dt;

  if (drive.active()) {
    const double period = 2.0 * std::numbers::pi / drive.omega_d;
    if (period <= target_dt * (1.0 + 1e-12)) {
      const auto periods = static_cast<std::int64_t>(std::max(1.0, std::round(target_dt / period)));
      dt = static_cast<double>(periods) * period;
      const Segment one = propagate_segment(rhs, drive, init.t, period, steps_for(period));
      // Binary powering of M together with the partial sum I + M + ... + M^(n-1).
      Eigen::Matrix4d power = Eigen::Matrix4d::Identity();
      Eigen::Matrix4d partial = Eigen::Matrix4d::Zero();
      Eigen::Matrix4d base = one.map;
      Eigen::Matrix4d base_sum = Eigen::Matrix4d::Identity();
      for (std::int64_t e = periods; e > 0; e >>= 1) {
        if (e & 1) {
          partial = partial + power * base_sum;
          power = power * base;
        }
        base_sum = base_sum + base * base_sum;
        base = base * base;
      }
      maps.push_back(power);
      averages.push_back(one.integral * partial / dt);
    } else {
      const auto m = static_cast<int>(std::ceil(period / target_dt - 1e-12));
      dt = period / m;
      const int steps = steps_for(dt);
      for (int j = 0; j < m; ++j) {
        const Segment seg = propagate_segment(rhs, drive, init.t + j * dt, dt, steps);
        maps.push_back(seg.map);
        averages.push_back(seg.integral / dt);
      }
    }
  } else {
    const Segment seg = propagate_segment(rhs, drive, init.t, dt, steps_for(dt));
    maps.push_back(seg.map);
    averages.push_back(seg.integral / dt);
  }

  const auto n = static_cast<std::int64_t>(std::max(2.0, std::round(t_max / dt)));
  TimeSeries ts = make_series(n, 1.0 / dt, static_cast<double>(n) * dt, init);
  ts.sampling = Sampling::interval_average;
  Eigen::Vector4d x;
  x << init.v, 1.0;
  const auto cycle = static_cast<std::int64_t>(maps.size());
  for (std::int64_t k = 0; k < n; ++k) {
    const auto j = static_cast<std::size_t>(k % cycle);
    ts.values(k) = averages[j].row(0).dot(x);
    x = maps[j] * x;
  }
  return ts;
}

}  // namespace tlsnoise
