// Helpers shared by the op implementations.
#pragma once

#include <cstddef>
#include <string>

#include "pshield/tensor.hpp"

namespace pshield::nn {

struct BatchInfo {
  std::size_t count = 1;
  bool batched = false;
};

// Accepts `base_rank` or `base_rank + 1` dimensions; the extra one is batch.
inline BatchInfo batch_of(const Tensor& t, std::size_t base_rank, const char* op) {
  if (t.rank() == base_rank) return {1, false};
  if (t.rank() == base_rank + 1) return {t.dim(0), true};
  throw ShapeError(std::string(op) + ": expected rank " + std::to_string(base_rank) + " or " +
                   std::to_string(base_rank + 1) + ", got " + shape_str(t.shape()));
}

}  // namespace pshield::nn
