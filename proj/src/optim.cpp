#include "pshield/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pshield::nn {

void sgd_step(std::span<Parameter* const> params, OptimizerState& opt) {
  if (!(opt.learning_rate > 0.0)) throw std::invalid_argument("sgd: learning rate must be positive");
  if (!(opt.momentum >= 0.0 && opt.momentum < 1.0)) {
    throw std::invalid_argument("sgd: momentum must be in [0, 1)");
  }
  if (opt.velocity.empty()) {
    for (const Parameter* p : params) opt.velocity.emplace_back(p->tensor().size(), 0.0);
  }
  if (opt.velocity.size() != params.size()) {
    throw std::invalid_argument("sgd: parameter list changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params[i]->tensor();
    auto& v = opt.velocity[i];
    if (v.size() != t.size()) {
      throw std::invalid_argument("sgd: velocity shape mismatch for " + params[i]->name());
    }
    auto value = t.mutable_values();
    auto grad = t.grad();
    if (grad.empty()) {
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] *= opt.momentum;
        value[j] += v[j];
      }
      continue;
    }
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = opt.momentum * v[j] - opt.learning_rate * grad[j];
      value[j] += v[j];
    }
    t.zero_grad();
  }
}

std::vector<double> uniform_values(std::size_t count, double limit, Rng& rng) {
  std::vector<double> out(count);
  for (double& v : out) v = rng.uniform(-limit, limit);
  return out;
}

std::vector<double> glorot_uniform(std::size_t count, std::size_t fan_in, std::size_t fan_out,
                                   Rng& rng) {
  return uniform_values(count, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

GradCheckResult grad_check(const std::function<Tensor()>& loss,
                           std::span<Parameter* const> params, double epsilon,
                           std::size_t max_coordinates, std::uint64_t seed) {
  for (Parameter* p : params) p->tensor().zero_grad();
  backward(loss());

  // (parameter, coordinate) pairs, sampled uniformly without replacement.
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::size_t total = 0;
  for (const Parameter* p : params) total += p->tensor().size();
  Rng rng(seed);
  if (total <= max_coordinates) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      for (std::size_t j = 0; j < params[i]->tensor().size(); ++j) coords.emplace_back(i, j);
    }
  } else {
    std::vector<std::size_t> flat(total);
    for (std::size_t i = 0; i < total; ++i) flat[i] = i;
    for (std::size_t i = 0; i < max_coordinates; ++i) {
      std::swap(flat[i], flat[i + static_cast<std::size_t>(rng.below(total - i))]);
    }
    flat.resize(max_coordinates);
    std::sort(flat.begin(), flat.end());
    std::size_t base = 0;
    std::size_t pi = 0;
    for (std::size_t f : flat) {
      while (f >= base + params[pi]->tensor().size()) base += params[pi++]->tensor().size();
      coords.emplace_back(pi, f - base);
    }
  }

  std::vector<std::vector<double>> analytic;
  for (const Parameter* p : params) {
    const auto g = p->tensor().grad();
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(p->tensor().size(), 0.0);
  }

  GradCheckResult result;
  for (auto [pi, j] : coords) {
    auto values = params[pi]->tensor().mutable_values();
    const double saved = values[j];
    values[j] = saved + epsilon;
    const double up = loss().item();
    values[j] = saved - epsilon;
    const double down = loss().item();
    values[j] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic[pi][j];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    result.max_relative_error = std::max(result.max_relative_error, rel);
    ++result.coordinates_checked;
  }
  for (Parameter* p : params) p->tensor().zero_grad();
  return result;
}

}  // namespace pshield::nn
