#include "tlsnoise/time_series.hpp"

#include "tlsnoise/errors.hpp"

#include <sstream>

namespace tlsnoise {

std::int64_t sample_count(double fs, double t_max) {
  if (!(fs > 0.0) || !(t_max > 0.0) || !std::isfinite(fs) || !std::isfinite(t_max)) {
    throw InvalidParameter("sampling window: fs and t_max must be finite and > 0");
  }
  const double raw = fs * t_max;
  const double n = std::round(raw);
  if (n < 1.0 || std::abs(raw - n) > 1e-9 * n) {
    std::ostringstream os;
    os << "sampling window: fs * t_max = " << raw << " is not a positive integer";
    throw InvalidParameter(os.str());
  }
  return static_cast<std::int64_t>(n);
}

}  // namespace tlsnoise
