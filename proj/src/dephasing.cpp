#include "tlsnoise/dephasing.hpp"

#include "tlsnoise/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace tlsnoise {

std::string to_string(Window w) {
  return w == Window::step ? "step" : "gaussian_sinc";
}

Window window_from_string(const std::string& name) {
  if (name == "gaussian_sinc" || name == "gaussian") return Window::gaussian_sinc;
  if (name == "step") return Window::step;
  throw InvalidParameter("unknown window '" + name + "'");
}

void DephasingConfig::validate() const {
  detail::require(c0 > 0.0 && std::isfinite(c0), "dephasing: c0 must be > 0");
  detail::require(fixed_point_tol > 0.0 && fixed_point_tol < 1.0,
                  "dephasing: fixed_point_tol must lie in (0, 1)");
  detail::require(max_iter >= 1, "dephasing: max_iter must be >= 1");
}

double window_gaussian(double x) {
  const double h = 0.5 * x;
  if (std::abs(h) < 1e-4) return 1.0 - h * h / 3.0;
  const double s = std::sin(h) / h;
  return s * s;
}

double window_integral(const Spectrum& s, double t, Window window) {
  if (s.size() == 0) throw InvalidInput("window_integral: empty spectrum");
  const double first = s.has_dc() ? s.dc_power : s.power(0);
  double total = 0.0;

  if (window == Window::gaussian_sinc) {
    double prev_w = 0.0;
    double prev_v = first;  // F(0) = 1
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double w = s.omega(i);
      const double v = s.power(i) * window_gaussian(w * t);
      total += 0.5 * (prev_v + v) * (w - prev_w);
      prev_w = w;
      prev_v = v;
    }
    for (const auto& line : s.lines) total += line.weight * window_gaussian(line.omega * t);
    return total;
  }

  const double cut = 1.0 / t;
  const double w1 = s.omega(0);
  if (cut <= w1) {
    const double p_cut = first + (s.power(0) - first) * cut / w1;
    total += 0.5 * (first + p_cut) * cut;
  } else {
    total += 0.5 * (first + s.power(0)) * w1;
    total += integrate_power(s, w1, cut);
  }
  for (const auto& line : s.lines) {
    if (line.omega <= cut) total += line.weight;
  }
  return total;
}

namespace {

// Step-window fixed point of a Lorentzian with the spectrum's weight and
// zero-frequency height; seeds the iteration.
double initial_guess(const Spectrum& s, double c0) {
  const double weight = s.norm_total();
  const double height = s.has_dc() ? s.dc_power : s.power(0);
  if (!(weight > 0.0)) return 1.0;
  if (!(height > 0.0)) return std::sqrt(2.0 / (c0 * weight));
  const double width = weight / (std::numbers::pi * height);
  auto excess = [&](double t) {
    return c0 * weight / std::numbers::pi * std::atan(1.0 / (width * t)) - 1.0 / (t * t);
  };
  double lo = 1e-12;
  double hi = 1e12;
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

}  // namespace

TphiResult tphi_solve(const Spectrum& s, const DephasingConfig& cfg) {
  cfg.validate();
  if (s.size() == 0) throw InvalidInput("tphi_solve: empty spectrum");

  TphiResult r;
  double t = initial_guess(s, cfg.c0);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const double integral = cfg.c0 * window_integral(s, t, cfg.window);
    r.iterations = it;
    if (!(integral > 0.0)) {
      r.t_phi = std::numeric_limits<double>::infinity();
      r.divergent = true;
      return r;
    }
    const double g = 1.0 / std::sqrt(integral);
    const double next = 0.5 * (t + g);
    const bool done = std::abs(next - t) <= cfg.fixed_point_tol * next;
    t = next;
    if (done) {
      r.converged = true;
      break;
    }
  }
  r.t_phi = t;
  return r;
}

double enhancement_ratio(const Spectrum& driven, const Spectrum& undriven,
                         const DephasingConfig& cfg) {
  const TphiResult d = tphi_solve(driven, cfg);
  const TphiResult u = tphi_solve(undriven, cfg);
  if (!d.converged || !u.converged) {
    std::ostringstream os;
    os << "enhancement_ratio: T_phi solve did not converge (driven " << d.t_phi << ", undriven "
       << u.t_phi << ")";
    throw NumericalFailure(os.str());
  }
  return d.t_phi / u.t_phi;
}

}  // namespace tlsnoise
