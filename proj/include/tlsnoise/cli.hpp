#pragma once

#include "tlsnoise/dephasing.hpp"
#include "tlsnoise/ensemble.hpp"
#include "tlsnoise/errors.hpp"
#include "tlsnoise/lindblad.hpp"
#include "tlsnoise/spectrum.hpp"
#include "tlsnoise/sweep.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tlsnoise::cli {

enum class Mode { simulate, psd, tphi, grid, eta_scan, epsilon_scan, ensemble, classical_check };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& name);

enum ExitCode : int { ok = 0, config_invalid = 2, numerical_failure = 3, io_failure = 4 };

/// Malformed, incomplete or inconsistent run configuration.
class ConfigError : public InvalidParameter {
 public:
  using InvalidParameter::InvalidParameter;
};

/// One TLS in rate units. The asymmetry comes from `lambda` when given, else
/// from detailed balance at `theta` (or the physical-units temperature), else 0.
struct TlsConfig {
  double epsilon = 0.0;
  double delta = 0.0;
  double gamma_total = 1.0;
  double eta = 1.0;
  std::optional<double> lambda;
  std::optional<double> theta;

  TlsParams resolve(std::optional<double> fallback_theta = std::nullopt) const;
};

struct SimulationConfig {
  double fs = 1e4;
  double t_max = 100.0;
  /// "ground" or "excited".
  std::string initial_state = "ground";
  /// "bloch" (RK4 on s_z, p, q) or "density_matrix".
  std::string propagator = "bloch";
};

struct PsdConfig {
  Estimator estimator = Estimator::periodogram;
  int welch_segments = 8;
  double welch_overlap = 0.5;
};

struct SweepConfig {
  /// "tls" or "ensemble".
  std::string base = "tls";
  Axis axis1{SweepAxis::alpha_z, {}};
  Axis axis2{SweepAxis::omega_d, {}};
  double alpha_x_ratio = 0.5;
  /// 0 means 1 / T_phi,0.
  double omega_cut = 0.0;
  std::vector<double> etas;
  std::vector<double> epsilons;
};

struct EnsembleConfig {
  std::vector<TlsConfig> members;
  double gamma_mid = 1e-3;
  EnsembleOptions options;
};

struct ClassicalConfig {
  double w_total = 1.0;
  double dw = 0.0;
  double drive_freq = 10.0;
  std::vector<double> amps{0.5, 1.0, 2.0};
  int seeds = 200;
  std::uint64_t seed = 1;
  double fs = 32.0;
  double t_max = 65536.0;
  /// Welch segment length in time units; segments do not overlap.
  double segment_length = 512.0;
  double omega_cut = 5.0;
  double tolerance = 0.1;
};

/// Optional physical scale: the reference rate in Hz and a temperature in K,
/// turned into theta once at load.
struct PhysicalUnits {
  double gamma_hz = 0.0;
  double temperature_k = 0.0;
};

struct RunConfig {
  int format_version = 1;
  Mode mode = Mode::tphi;
  std::string output_dir = "out";
  std::string preset;
  std::string note;
  int parallel = 0;
  TlsConfig tls;
  std::vector<DriveParams> drives;
  SimulationConfig simulation;
  PsdConfig psd;
  DephasingConfig dephasing;
  SweepConfig sweep;
  EnsembleConfig ensemble;
  ClassicalConfig classical;
  std::optional<PhysicalUnits> physical_units;

  /// Checks every field the selected mode uses; throws ConfigError.
  void validate() const;
  /// theta from the physical-units block, if any.
  std::optional<double> physical_theta() const;
};

inline constexpr int format_version = 1;

/// Parses a run config or a manifest (its embedded config). Unknown keys,
/// wrong types and a missing `mode` or `format_version` raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON: every field, fixed key order, two-space indent.
std::string serialize(const RunConfig& cfg);

std::vector<std::string> preset_names();
/// Fully resolved config for a figure; throws ConfigError for unknown names.
RunConfig figure_preset(const std::string& name);

TlsParams resolved_tls(const RunConfig& cfg);
EnsembleSpec resolved_ensemble(const RunConfig& cfg);
SweepPlan resolved_plan(const RunConfig& cfg);

struct Outcome {
  int exit_code = ok;
  std::string message;
  std::vector<std::filesystem::path> files;
};

/// Validates, runs the mode and writes CSVs, config.json and manifest.json
/// under cfg.output_dir. Each file is written to a temporary name and renamed.
/// Errors are mapped onto exit codes rather than thrown.
Outcome execute(const RunConfig& cfg, std::ostream& log);

/// Exit code for an exception escaping a run.
int exit_code_for(const std::exception& e);

/// Writes `text` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace tlsnoise::cli
