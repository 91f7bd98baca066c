#pragma once

#include "tlsnoise/lindblad.hpp"
#include "tlsnoise/spectrum.hpp"

#include <cstdint>
#include <vector>

namespace tlsnoise {

/// Sampling window for one member. fs * t_max must be an integer.
struct MemberSampling {
  double fs = 0.0;
  double t_max = 0.0;
};

struct EnsembleSpec {
  std::vector<TlsParams> members;
  DriveParams shared_drive;
  /// Either empty (chosen per member by simulate_ensemble) or one entry per
  /// member.
  std::vector<MemberSampling> per_member_sim;
  /// Reference frequency, the logarithmic middle of the switching rates.
  double gamma_mid = 1e-3;

  void validate() const;
};

/// Seven members with Gamma = 1e-6 ... 1, eta = Gamma, eps = Delta = lambda = 0.
EnsembleSpec default_1f_ensemble();

enum class EnsembleMode {
  /// Each member gets a window long enough to resolve its own Lorentzian.
  resolved,
  /// One shared window (fs = 1e3, t_max = 1e3) for every member.
  faithful,
};

std::string to_string(EnsembleMode m);
EnsembleMode ensemble_mode_from_string(const std::string& name);

struct EnsembleOptions {
  EnsembleMode mode = EnsembleMode::resolved;
  int threads = 0;
  int grid_per_decade = 200;
  /// Resolved mode: window length in units of 1/Gamma, and its floor when
  /// the sample cap forces a shorter window.
  double relaxation_times = 100.0;
  double min_relaxation_times = 20.0;
  /// Resolved mode: samples per 1/Gamma.
  double samples_per_rate = 1e4;
  /// Resolved mode: highest frequency a driven member must resolve; 0 means
  /// 10 times the fastest member rate.
  double band_top = 0.0;
  std::int64_t max_samples = std::int64_t{1} << 22;
  /// Members needing more RK4 steps than this are propagated with the
  /// one-period map (integrate_averaged) instead.
  double direct_step_budget = 5e7;
  double faithful_fs = 1e3;
  double faithful_t_max = 1e3;
};

/// Window that simulate_ensemble would use for `member` under `drive`.
MemberSampling choose_sampling(const TlsParams& member, const DriveParams& drive,
                               double band_top, const EnsembleOptions& opts);

/// Per-member spectra and the aggregate on the common log grid.
struct EnsembleRun {
  Spectrum aggregate;
  std::vector<Spectrum> members;
  std::vector<MemberSampling> sampling;
};

/// Simulates every member from |0> and sums the member spectra.
///
/// Undriven members are normalized to unit weight. A driven member is scaled
/// by the factor its undriven twin needs on the same sampling grid, so the
/// weight the drive removes from low frequencies shows up as lost power.
EnsembleRun simulate_ensemble_members(const EnsembleSpec& spec, const EnsembleOptions& opts = {});

/// Aggregate spectrum only.
Spectrum simulate_ensemble(const EnsembleSpec& spec, const EnsembleOptions& opts = {});

}  // namespace tlsnoise
