// Mini-batch SGD with momentum, weight initialization and gradient checking.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pshield/random.hpp"
#include "pshield/tensor.hpp"

namespace pshield::nn {

struct OptimizerState {
  double learning_rate = 0.01;
  double momentum = 0.9;
  // Velocity per parameter, in the order parameters are passed to sgd_step.
  std::vector<std::vector<double>> velocity;
};

// v <- momentum * v - lr * grad; p <- p + v; grad <- 0.
// Throws std::invalid_argument on an out-of-range rate or momentum, or when
// the parameter list no longer matches the velocity buffers.
void sgd_step(std::span<Parameter* const> params, OptimizerState& opt);

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
std::vector<double> glorot_uniform(std::size_t count, std::size_t fan_in, std::size_t fan_out,
                                   Rng& rng);
// Uniform in +-limit.
std::vector<double> uniform_values(std::size_t count, double limit, Rng& rng);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
};

inline constexpr double kGradCheckEpsilon = 1e-5;
inline constexpr std::size_t kGradCheckMaxCoordinates = 200;

// Compares analytic gradients of loss() against central differences on at
// most `max_coordinates` coordinates sampled across all parameters.
// Relative error is |a - n| / max(|a|, |n|, 1e-8). loss() must rebuild the
// graph from the current parameter values on every call and be
// deterministic. Parameter gradients are zeroed on return.
GradCheckResult grad_check(const std::function<Tensor()>& loss,
                           std::span<Parameter* const> params,
                           double epsilon = kGradCheckEpsilon,
                           std::size_t max_coordinates = kGradCheckMaxCoordinates,
                           std::uint64_t seed = 0);

}  // namespace pshield::nn
