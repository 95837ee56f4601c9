// D/T ensemble of one deep and one traditional detector score.
#pragma once

namespace pshield {

struct EnsembleConfig {
  double gate = 0.99;  // in (0, 1]
};

// max(deep, traditional) when it reaches the gate, else their mean. Throws
// std::invalid_argument for scores outside [0, 1] or a bad gate.
double combine(double deep, double traditional, const EnsembleConfig& cfg = {});

}  // namespace pshield
