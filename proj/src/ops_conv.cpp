#include <cstdint>
#include <vector>

#include "ops_common.hpp"
#include "pshield/kernels.hpp"
#include "pshield/ops.hpp"

namespace pshield::nn {
namespace {

struct ConvGeom {
  std::size_t channels;
  std::size_t length;
  std::size_t filters;
  std::size_t width;
  std::size_t stride;
  std::size_t steps;

  std::size_t in_size() const { return channels * length; }
  std::size_t out_size() const { return filters * steps; }
  std::size_t patch() const { return channels * width; }
};

// Samples this sparse use the scatter path (one-hot columns hold <= 2 ones).
constexpr double kSparseDensity = 0.1;

bool is_sparse(const double* x, std::size_t n) {
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < n; ++i) nnz += x[i] != 0.0;
  return static_cast<double>(nnz) <= kSparseDensity * static_cast<double>(n);
}

void im2col(const ConvGeom& g, const double* x, double* cols) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t j = 0; j < g.width; ++j) {
      double* row = cols + (c * g.width + j) * g.steps;
      const double* src = x + c * g.length + j;
      for (std::size_t t = 0; t < g.steps; ++t) row[t] = src[t * g.stride];
    }
  }
}

void col2im_add(const ConvGeom& g, const double* cols, double* x) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t j = 0; j < g.width; ++j) {
      const double* row = cols + (c * g.width + j) * g.steps;
      double* dst = x + c * g.length + j;
      for (std::size_t t = 0; t < g.steps; ++t) dst[t * g.stride] += row[t];
    }
  }
}

// Calls fn(c, t, j, value) for every nonzero input entry and every output
// step it feeds.
template <class Fn>
void for_each_tap(const ConvGeom& g, const double* x, Fn&& fn) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* row = x + c * g.length;
    for (std::size_t pos = 0; pos < g.length; ++pos) {
      if (row[pos] == 0.0) continue;
      for (std::size_t j = 0; j < g.width && j <= pos; ++j) {
        const std::size_t off = pos - j;
        if (off % g.stride != 0) continue;
        const std::size_t t = off / g.stride;
        if (t < g.steps) fn(c, t, j, row[pos]);
      }
    }
  }
}

// wt[(c * width + j) * K + k] = w[k][c][j]
std::vector<double> transpose_kernels(const ConvGeom& g, const double* w) {
  std::vector<double> wt(g.filters * g.patch());
  for (std::size_t k = 0; k < g.filters; ++k) {
    for (std::size_t p = 0; p < g.patch(); ++p) wt[p * g.filters + k] = w[k * g.patch() + p];
  }
  return wt;
}

void forward_sparse(const ConvGeom& g, const double* x, const double* wt, const double* bias,
                    double* out, std::vector<double>& scratch) {
  scratch.assign(g.steps * g.filters, 0.0);
  for_each_tap(g, x, [&](std::size_t c, std::size_t t, std::size_t j, double v) {
    const double* wrow = wt + (c * g.width + j) * g.filters;
    double* o = scratch.data() + t * g.filters;
    for (std::size_t k = 0; k < g.filters; ++k) o[k] += v * wrow[k];
  });
  for (std::size_t k = 0; k < g.filters; ++k) {
    for (std::size_t t = 0; t < g.steps; ++t) out[k * g.steps + t] = bias[k] + scratch[t * g.filters + k];
  }
}

void forward_dense(const ConvGeom& g, const double* x, const double* w, const double* bias,
                   double* out, std::vector<double>& cols) {
  cols.resize(g.patch() * g.steps);
  im2col(g, x, cols.data());
  for (std::size_t k = 0; k < g.filters; ++k) {
    for (std::size_t t = 0; t < g.steps; ++t) out[k * g.steps + t] = bias[k];
  }
  kernels::gemm({false, false, g.filters, g.steps, g.patch()}, w, g.patch(), cols.data(), g.steps,
                1.0, out, g.steps);
}

}  // namespace

Tensor conv1d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride) {
  const auto b = batch_of(input, 2, "conv1d");
  const std::size_t off = b.batched ? 1 : 0;
  if (kernels.rank() != 3 || bias.rank() != 1 || bias.dim(0) != kernels.dim(0) ||
      kernels.dim(1) != input.dim(off) || stride == 0 || input.dim(off + 1) < kernels.dim(2)) {
    throw ShapeError("conv1d: input " + shape_str(input.shape()) + " vs kernels " +
                     shape_str(kernels.shape()) + ", bias " + shape_str(bias.shape()) +
                     ", stride " + std::to_string(stride));
  }
  ConvGeom g{input.dim(off), input.dim(off + 1), kernels.dim(0), kernels.dim(2), stride, 0};
  g.steps = (g.length - g.width) / stride + 1;

  const double* x = input.values().data();
  const double* w = kernels.values().data();
  const double* bv = bias.values().data();
  std::vector<double> out(b.count * g.out_size());
  std::vector<std::uint8_t> sparse(b.count, 0);
  std::vector<double> wt;
  std::vector<double> scratch;
  for (std::size_t s = 0; s < b.count; ++s) {
    const double* xs = x + s * g.in_size();
    sparse[s] = !input.requires_grad() && is_sparse(xs, g.in_size());
    if (sparse[s]) {
      if (wt.empty()) wt = transpose_kernels(g, w);
      forward_sparse(g, xs, wt.data(), bv, out.data() + s * g.out_size(), scratch);
    } else {
      forward_dense(g, xs, w, bv, out.data() + s * g.out_size(), scratch);
    }
  }

  Shape shape = b.batched ? Shape{b.count, g.filters, g.steps} : Shape{g.filters, g.steps};
  auto xn = input.node();
  auto wn = kernels.node();
  auto bn = bias.node();
  const std::size_t count = b.count;
  return Tensor::make_result(
      "conv1d", std::move(shape), std::move(out), {input, kernels, bias},
      [xn, wn, bn, g, count, sparse = std::move(sparse)](detail::Node& self) {
        if (bn->requires_grad) {
          auto gb = bn->ensure_grad();
          for (std::size_t s = 0; s < count; ++s) {
            const double* gs = self.grad.data() + s * g.out_size();
            for (std::size_t k = 0; k < g.filters; ++k) {
              double acc = 0.0;
              for (std::size_t t = 0; t < g.steps; ++t) acc += gs[k * g.steps + t];
              gb[k] += acc;
            }
          }
        }
        std::vector<double> cols;
        std::vector<double> gt;
        std::vector<double> dwt;
        for (std::size_t s = 0; s < count; ++s) {
          const double* xs = xn->value.data() + s * g.in_size();
          const double* gs = self.grad.data() + s * g.out_size();
          if (sparse[s]) {
            if (!wn->requires_grad) continue;
            gt.resize(g.steps * g.filters);
            for (std::size_t k = 0; k < g.filters; ++k) {
              for (std::size_t t = 0; t < g.steps; ++t) gt[t * g.filters + k] = gs[k * g.steps + t];
            }
            if (dwt.empty()) dwt.assign(g.filters * g.patch(), 0.0);
            for_each_tap(g, xs, [&](std::size_t c, std::size_t t, std::size_t j, double v) {
              double* d = dwt.data() + (c * g.width + j) * g.filters;
              const double* gr = gt.data() + t * g.filters;
              for (std::size_t k = 0; k < g.filters; ++k) d[k] += v * gr[k];
            });
            continue;
          }
          cols.resize(g.patch() * g.steps);
          if (wn->requires_grad) {
            im2col(g, xs, cols.data());
            kernels::gemm({false, true, g.filters, g.patch(), g.steps}, gs, g.steps, cols.data(),
                          g.steps, 1.0, wn->ensure_grad().data(), g.patch());
          }
          if (xn->requires_grad) {
            kernels::gemm({true, false, g.patch(), g.steps, g.filters}, wn->value.data(),
                          g.patch(), gs, g.steps, 0.0, cols.data(), g.steps);
            col2im_add(g, cols.data(), xn->ensure_grad().data() + s * g.in_size());
          }
        }
        if (!dwt.empty()) {
          auto gw = wn->ensure_grad();
          for (std::size_t k = 0; k < g.filters; ++k) {
            for (std::size_t p = 0; p < g.patch(); ++p) gw[k * g.patch() + p] += dwt[p * g.filters + k];
          }
        }
      });
}

Tensor maxpool1d(const Tensor& input, std::size_t window, std::size_t stride) {
  if (stride == 0) stride = window;
  const auto b = batch_of(input, 2, "maxpool1d");
  const std::size_t off = b.batched ? 1 : 0;
  const std::size_t rows = input.dim(off);
  const std::size_t len = input.dim(off + 1);
  if (window == 0 || window > len) {
    throw ShapeError("maxpool1d: window " + std::to_string(window) + " on input " +
                     shape_str(input.shape()));
  }
  const std::size_t steps = (len - window) / stride + 1;
  const std::size_t total_rows = b.count * rows;
  const double* x = input.values().data();
  std::vector<double> out(total_rows * steps);
  std::vector<std::uint32_t> argmax(out.size());
  for (std::size_t r = 0; r < total_rows; ++r) {
    const double* row = x + r * len;
    for (std::size_t t = 0; t < steps; ++t) {
      std::size_t best = t * stride;
      for (std::size_t j = 1; j < window; ++j) {
        if (row[t * stride + j] > row[best]) best = t * stride + j;
      }
      out[r * steps + t] = row[best];
      argmax[r * steps + t] = static_cast<std::uint32_t>(best);
    }
  }
  Shape shape = b.batched ? Shape{b.count, rows, steps} : Shape{rows, steps};
  auto xn = input.node();
  return Tensor::make_result("maxpool1d", std::move(shape), std::move(out), {input},
                             [xn, argmax = std::move(argmax), steps, len](detail::Node& self) {
                               auto gx = xn->ensure_grad();
                               for (std::size_t i = 0; i < argmax.size(); ++i) {
                                 gx[(i / steps) * len + argmax[i]] += self.grad[i];
                               }
                             });
}

}  // namespace pshield::nn
