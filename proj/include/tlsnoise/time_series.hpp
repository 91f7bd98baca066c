#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>

namespace tlsnoise {

/// How each stored value relates to the underlying continuous signal.
enum class Sampling {
  instantaneous,     ///< value at t_k = k / fs
  interval_average,  ///< mean over [t_k, t_k + 1/fs)
};

/// Uniformly sampled s_z(t), starting at t = 0.
struct TimeSeries {
  Eigen::VectorXd values;
  double fs = 1.0;
  double t_max = 0.0;
  std::string initial_state = "|0>";
  Sampling sampling = Sampling::instantaneous;

  double dt() const { return 1.0 / fs; }
  Eigen::Index size() const { return values.size(); }
  double time(Eigen::Index k) const { return static_cast<double>(k) / fs; }
};

/// Number of samples for a (fs, t_max) window; throws unless fs * t_max is a
/// positive integer (to a relative 1e-9).
std::int64_t sample_count(double fs, double t_max);

}  // namespace tlsnoise
