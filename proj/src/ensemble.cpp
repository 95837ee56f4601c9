#include "pshield/ensemble.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace pshield {

double combine(double deep, double traditional, const EnsembleConfig& cfg) {
  if (!(cfg.gate > 0.0 && cfg.gate <= 1.0)) {
    throw std::invalid_argument("ensemble gate must be in (0, 1], got " + std::to_string(cfg.gate));
  }
  if (!(deep >= 0.0 && deep <= 1.0 && traditional >= 0.0 && traditional <= 1.0)) {
    throw std::invalid_argument("ensemble scores must be in [0, 1]");
  }
  const double hi = std::max(deep, traditional);
  if (hi >= cfg.gate) return hi;
  return (deep + traditional) / 2.0;
}

}  // namespace pshield
