#pragma once

#include "tlsnoise/spectrum.hpp"

#include <string>

namespace tlsnoise {

enum class Window {
  gaussian_sinc,  ///< F(x) = sin^2(x/2) / (x/2)^2
  step,           ///< F(x) = 1 for x <= 1, else 0
};

std::string to_string(Window w);
Window window_from_string(const std::string& name);

struct DephasingConfig {
  double c0 = 1.0;
  Window window = Window::gaussian_sinc;
  double fixed_point_tol = 1e-6;
  int max_iter = 100;

  void validate() const;
};

/// sin^2(x/2) / (x/2)^2, equal to 1 at x = 0.
double window_gaussian(double x);

struct TphiResult {
  double t_phi = 0.0;
  int iterations = 0;
  bool converged = false;
  /// The spectrum carries no weight inside the window; T_phi is unbounded.
  bool divergent = false;
};

/// int_0^inf S(omega) F(omega T) d omega on the spectrum's native grid plus
/// the exact contribution of its lines.
double window_integral(const Spectrum& s, double t, Window window);

/// Solves 1/T^2 = C0 * window_integral(S, T) by damped fixed-point iteration
/// T <- (T + g(T)) / 2 with g(T) = [C0 * window_integral(S, T)]^(-1/2).
TphiResult tphi_solve(const Spectrum& s, const DephasingConfig& cfg);

/// T_phi(driven) / T_phi(undriven). Throws NumericalFailure if either solve
/// fails to converge or diverges.
double enhancement_ratio(const Spectrum& driven, const Spectrum& undriven,
                         const DephasingConfig& cfg);

}  // namespace tlsnoise
