#pragma once

#include "tlsnoise/time_series.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace tlsnoise {

/// Physical parameters of one two-level fluctuator, in units of a reference
/// rate (hbar = k_B = 1).
struct TlsParams {
  double epsilon = 0.0;       ///< level splitting
  double delta = 0.0;         ///< tunnelling amplitude
  double gamma_relax = 1.0;   ///< relaxation rate (|1> -> |0>)
  double kappa_excite = 1.0;  ///< excitation rate (|0> -> |1>)
  double eta = 1.0;           ///< pure dephasing rate

  /// Gamma = (gamma + kappa) / 2
  double gamma_total() const { return 0.5 * (gamma_relax + kappa_excite); }
  /// lambda = gamma - kappa
  double lambda() const { return gamma_relax - kappa_excite; }

  void validate() const;

  /// Builds the rates from (Gamma, lambda); requires |lambda| <= 2 Gamma.
  static TlsParams from_total(double gamma_total, double lambda, double eta, double epsilon = 0.0,
                              double delta = 0.0);
  /// lambda fixed by detailed balance at temperature theta (rate units).
  static TlsParams thermal(double gamma_total, double eta, double epsilon, double delta,
                           double theta);
};

struct DriveParams {
  double alpha_z = 0.0;
  double alpha_x = 0.0;
  double omega_d = 0.0;

  void validate() const;
  bool active() const { return omega_d > 0.0 && (alpha_z > 0.0 || alpha_x > 0.0); }
  /// Zero drive frequency with non-zero strength is a static field.
  bool static_field() const { return omega_d == 0.0 && (alpha_z > 0.0 || alpha_x > 0.0); }
};

/// Real Bloch triple (s_z, p, q) at time t.
///
/// s_z = rho00 - rho11 and q = rho01 + rho10. The paper-style off-diagonal
/// asymmetry rho01 - rho10 is purely imaginary for Hermitian rho; `p` holds
/// the real number -i (rho01 - rho10) = -<sigma_y>, the sign under which the
/// coupled equations in `derivatives` coincide with the Lindblad equation.
template <typename Scalar>
using Bloch = Eigen::Matrix<Scalar, 3, 1>;

struct BlochState {
  Bloch<double> v = Bloch<double>(1.0, 0.0, 0.0);
  double t = 0.0;

  double s_z() const { return v(0); }
  double p() const { return v(1); }
  double q() const { return v(2); }

  static BlochState ground() { return {}; }  // |0>
  static BlochState excited() { return {Bloch<double>(-1.0, 0.0, 0.0), 0.0}; }
};

/// lambda = 2 Gamma tanh(epsilon / (2 theta)).
double detailed_balance_lambda(double gamma_total, double epsilon, double theta);

/// theta = k_B T / (hbar Gamma) from a temperature in kelvin and a reference
/// rate in s^-1.
double theta_from_physical(double temperature_kelvin, double reference_rate_hz);

/// Right-hand side of the driven (s_z, p, q) system:
///
///     ds_z/dt = -2 Gamma s_z + lambda - (Delta + 2 a_x c) p
///     dp/dt   = (Delta + 2 a_x c) s_z - (Gamma + 2 eta) p - (eps + 2 a_z c) q
///     dq/dt   = (eps + 2 a_z c) p - (Gamma + 2 eta) q
///
/// with c = cos(omega_d t).
template <typename Scalar>
Bloch<Scalar> derivatives(const Bloch<Scalar>& x, Scalar t, const TlsParams& params,
                          const DriveParams& drive) {
  using std::cos;
  const Scalar c = drive.omega_d == 0.0 ? Scalar(1) : cos(Scalar(drive.omega_d) * t);
  const Scalar gamma = params.gamma_total();
  const Scalar decay_pq = gamma + Scalar(2) * Scalar(params.eta);
  const Scalar bx = Scalar(params.delta) + Scalar(2) * Scalar(drive.alpha_x) * c;
  const Scalar bz = Scalar(params.epsilon) + Scalar(2) * Scalar(drive.alpha_z) * c;
  return Bloch<Scalar>(-Scalar(2) * gamma * x(0) + Scalar(params.lambda()) - bx * x(1),
                       bx * x(0) - decay_pq * x(1) - bz * x(2),
                       bz * x(1) - decay_pq * x(2));
}

inline Bloch<double> derivatives(const BlochState& state, const TlsParams& params,
                                 const DriveParams& drive) {
  return derivatives<double>(state.v, state.t, params, drive);
}

/// Largest frequency scale of the system, max(2 Gamma, Gamma + 2 eta,
/// |eps| + 2 a_z, |Delta| + 2 a_x, omega_d).
double max_frequency(const TlsParams& params, const DriveParams& drive);

struct IntegratorOptions {
  /// Internal RK4 steps per sample; 0 picks the smallest count meeting
  /// h * omega_max <= step_bound.
  int substeps = 0;
  double step_bound = 0.1;
  /// Refuse runs needing more than this many internal steps per unit time.
  double max_step_rate = 1e7;
};

/// Fixed-step RK4 integration of `derivatives`, recording s_z every 1/fs.
TimeSeries integrate(const TlsParams& params, const DriveParams& drive, const BlochState& init,
                     double fs, double t_max, const IntegratorOptions& opts = {});

/// Same physics through the full complex 2x2 Lindblad equation; returns
/// Tr[rho sigma_z]. Reference implementation for `integrate`.
TimeSeries integrate_full_density_matrix(const TlsParams& params, const DriveParams& drive,
                                         const BlochState& init, double fs, double t_max,
                                         const IntegratorOptions& opts = {});

/// Density matrix corresponding to a Bloch state under the sign convention
/// documented on BlochState.
Eigen::Matrix2cd density_matrix(const Bloch<double>& v);
Bloch<double> bloch_vector(const Eigen::Matrix2cd& rho);

/// Right-hand side of the Lindblad equation with H(t) and the three jump
/// operators (relaxation, excitation, dephasing).
Eigen::Matrix2cd lindblad_rhs(const Eigen::Matrix2cd& rho, double t, const TlsParams& params,
                              const DriveParams& drive);

/// Interval-averaged s_z at a step `target_dt` (or the nearest value that is
/// commensurate with the drive period), computed by composing a one-period
/// affine propagator instead of stepping through the whole window. Used for
/// slow fluctuators whose window spans millions of drive periods.
TimeSeries integrate_averaged(const TlsParams& params, const DriveParams& drive,
                              const BlochState& init, double target_dt, double t_max,
                              const IntegratorOptions& opts = {});

}  // namespace tlsnoise
