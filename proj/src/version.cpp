#include "tlsnoise/version.hpp"

namespace tlsnoise {

const char* version() { return TLSNOISE_VERSION; }

}  // namespace tlsnoise
