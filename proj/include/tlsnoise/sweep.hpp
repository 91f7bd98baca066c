#pragma once

#include "tlsnoise/dephasing.hpp"
#include "tlsnoise/ensemble.hpp"
#include "tlsnoise/lindblad.hpp"
#include "tlsnoise/spectrum.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tlsnoise {

enum class SweepAxis { alpha_z, omega_d, eta, epsilon };

std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& name);

struct Axis {
  SweepAxis name = SweepAxis::alpha_z;
  std::vector<double> values;
};

/// n points spaced evenly in log10 from lo to hi inclusive.
Axis log_axis(SweepAxis name, double lo, double hi, int n);

struct SweepPlan {
  Axis axis1{SweepAxis::alpha_z, {}};
  Axis axis2{SweepAxis::omega_d, {}};
  /// Coupling rule: alpha_x = alpha_x_ratio * alpha_z in every cell.
  double alpha_x_ratio = 0.5;
  std::variant<TlsParams, EnsembleSpec> base = TlsParams::from_total(1.0, 0.0, 1.0);
  /// Drive values for whatever the axes do not set.
  DriveParams drive;
  DephasingConfig dephasing;
  /// Single-TLS simulation window.
  double fs = 1e4;
  double t_max = 100.0;
  EnsembleOptions ensemble;
  /// Cutoff for R_emp; 0 means 1 / T_phi,0 of the cell's baseline.
  double omega_cut = 0.0;
  int threads = 0;
  /// Keep each cell's driven spectrum in the result.
  bool keep_spectra = false;

  bool single() const { return std::holds_alternative<TlsParams>(base); }
  void validate() const;
};

struct SweepRecord {
  double alpha_z = 0.0;
  double alpha_x = 0.0;
  double omega_d = 0.0;
  double eta = 0.0;
  double epsilon = 0.0;
  double t_phi_0 = 0.0;
  double t_phi_d = 0.0;
  double ratio = 0.0;
  double r_emp = 0.0;
  bool converged = false;
  /// Non-empty when the cell failed; the numbers are then NaN.
  std::string error;
};

struct SweepResult {
  SweepAxis axis1 = SweepAxis::alpha_z;
  SweepAxis axis2 = SweepAxis::omega_d;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  /// Row-major over (axis1, axis2).
  std::vector<SweepRecord> cells;
  /// Undriven spectra, one per distinct baseline, in first-use order.
  std::vector<Spectrum> baselines;
  /// Driven spectra per cell, filled when SweepPlan::keep_spectra is set.
  std::vector<Spectrum> spectra;
  std::vector<std::pair<std::string, std::string>> provenance;

  const SweepRecord& at(std::size_t i, std::size_t j) const { return cells[i * n2 + j]; }
  /// Converged cell with the largest ratio, if any.
  std::optional<std::size_t> best() const;
};

/// One undriven baseline per distinct (eta, epsilon) and one driven run per
/// cell. A cell that throws is recorded with its message; a baseline that
/// throws aborts the sweep.
SweepResult run_grid(const SweepPlan& plan);

/// Drive fixed by `drive`, eta over `etas`. Keeps spectra.
SweepResult run_eta_scan(const TlsParams& base, const DriveParams& drive,
                         const std::vector<double>& etas, const SweepPlan& settings = {});

/// Index of the eta with the largest R_emp.
std::size_t argmax_r(const SweepResult& eta_scan);

/// run_grid once per epsilon with the base's epsilon replaced (Delta must be 0).
std::vector<SweepResult> run_epsilon_scan(const SweepPlan& plan,
                                          const std::vector<double>& epsilons);

/// Ratio against alpha_z at the omega_d column holding the grid maximum.
struct AlphaPeak {
  double omega_d = 0.0;
  std::vector<double> alpha_z;
  std::vector<double> ratio;
  /// An interior cell beats both neighbours by more than the prominence.
  bool interior = false;
  std::size_t index = 0;
  /// Quadratic fit on log10(alpha_z) through the peak and its neighbours.
  double alpha_peak = 0.0;
  double prominence = 0.0;
};

/// Needs axis1 = alpha_z and axis2 = omega_d.
AlphaPeak find_alpha_peak(const SweepResult& grid, double min_prominence = 0.1);

/// Long-format CSV: alpha_z, omega_d, eta, epsilon, t_phi_0, t_phi_d, ratio,
/// R_emp, converged; provenance as leading '#' lines.
void write_csv(std::ostream& os, const SweepResult& r);

/// Canonical text of a plan, used for the provenance hash.
std::string describe(const SweepPlan& plan);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace tlsnoise
