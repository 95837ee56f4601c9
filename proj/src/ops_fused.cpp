#include <algorithm>
#include <numeric>

#include "ops_common.hpp"
#include "pshield/kernels.hpp"
#include "pshield/ops.hpp"

namespace pshield::nn {

Tensor dense_padded_tail(std::span<const Tensor> active, const Tensor& tail, std::size_t positions,
                         const Tensor& weights, const Tensor& bias) {
  if (active.empty()) throw ShapeError("dense_padded_tail: no samples");
  if (tail.rank() != 1 || weights.rank() != 2 || bias.rank() != 1 ||
      weights.dim(1) != positions * tail.dim(0) || bias.dim(0) != weights.dim(0)) {
    throw ShapeError("dense_padded_tail: tail " + shape_str(tail.shape()) + ", " +
                     std::to_string(positions) + " positions, weights " +
                     shape_str(weights.shape()) + ", bias " + shape_str(bias.shape()));
  }
  const std::size_t k_ch = tail.dim(0);
  const std::size_t n = weights.dim(0);
  const std::size_t pk = positions * k_ch;
  const std::size_t count = active.size();

  std::vector<std::size_t> lens(count);
  for (std::size_t s = 0; s < count; ++s) {
    const Tensor& a = active[s];
    if (a.rank() != 2 || a.dim(0) != k_ch || a.dim(1) > positions) {
      throw ShapeError("dense_padded_tail: active map " + shape_str(a.shape()) + " for " +
                       std::to_string(k_ch) + " channels and " + std::to_string(positions) +
                       " positions");
    }
    lens[s] = a.dim(1);
  }
  // Rows sorted by active length, longest first, so every column segment is
  // used by a prefix of the rows.
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lens[a] > lens[b]; });

  std::vector<double> x(count * pk, 0.0);
  for (std::size_t r = 0; r < count; ++r) {
    const Tensor& a = active[order[r]];
    const std::size_t len = lens[order[r]];
    const double* av = a.values().data();
    double* row = x.data() + r * pk;
    for (std::size_t k = 0; k < k_ch; ++k) {
      for (std::size_t p = 0; p < len; ++p) row[p * k_ch + k] = av[k * len + p];
    }
  }

  // Segment j covers positions [lo, hi) and the rows whose length >= hi.
  struct Segment {
    std::size_t lo, hi, rows;
  };
  std::vector<Segment> segments;
  for (std::size_t r = 0; r < count;) {
    const std::size_t hi = lens[order[r]];
    std::size_t end = r;
    while (end < count && lens[order[end]] == hi) ++end;
    const std::size_t lo = end < count ? lens[order[end]] : 0;
    if (hi > lo) segments.push_back({lo * k_ch, hi * k_ch, end});
    r = end;
  }

  const double* w = weights.values().data();
  const double* t = tail.values().data();
  const auto& kt = kernels::active();
  // suffix[i * (P + 1) + a] = sum over p >= a of W[i, p-block] . tail
  std::vector<double> suffix(n * (positions + 1), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* sfx = suffix.data() + i * (positions + 1);
    for (std::size_t p = positions; p-- > 0;) {
      sfx[p] = sfx[p + 1] + kt.dot(w + i * pk + p * k_ch, t, k_ch);
    }
  }

  std::vector<double> y(count * n);
  const double* bv = bias.values().data();
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t len = lens[order[r]];
    for (std::size_t i = 0; i < n; ++i) y[r * n + i] = bv[i] + suffix[i * (positions + 1) + len];
  }
  for (const auto& seg : segments) {
    kernels::gemm({false, true, seg.rows, n, seg.hi - seg.lo}, x.data() + seg.lo, pk, w + seg.lo,
                  pk, 1.0, y.data(), n);
  }
  std::vector<double> out(count * n);
  for (std::size_t r = 0; r < count; ++r) {
    std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(r * n), n, out.begin() + order[r] * n);
  }

  std::vector<Tensor> inputs(active.begin(), active.end());
  std::vector<std::shared_ptr<detail::Node>> active_nodes;
  for (const auto& a : active) active_nodes.push_back(a.node());
  inputs.push_back(tail);
  inputs.push_back(weights);
  inputs.push_back(bias);
  auto tn = tail.node();
  auto wn = weights.node();
  auto bn = bias.node();
  return Tensor::make_result(
      "dense_padded_tail", {count, n}, std::move(out), std::move(inputs),
      [active_nodes = std::move(active_nodes), tn, wn, bn, lens = std::move(lens),
       order = std::move(order), segments = std::move(segments), x = std::move(x), k_ch, n, pk,
       positions, count](detail::Node& self) {
        std::vector<double> g(count * n);
        for (std::size_t r = 0; r < count; ++r) {
          std::copy_n(self.grad.begin() + static_cast<std::ptrdiff_t>(order[r] * n), n,
                      g.begin() + r * n);
        }
        if (bn->requires_grad) {
          auto gb = bn->ensure_grad();
          for (std::size_t r = 0; r < count; ++r) {
            for (std::size_t i = 0; i < n; ++i) gb[i] += g[r * n + i];
          }
        }
        const double* w = wn->value.data();
        if (wn->requires_grad) {
          double* gw = wn->ensure_grad().data();
          for (const auto& seg : segments) {
            kernels::gemm({true, false, n, seg.hi - seg.lo, seg.rows}, g.data(), n,
                          x.data() + seg.lo, pk, 1.0, gw + seg.lo, pk);
          }
        }
        const bool any_active = std::any_of(active_nodes.begin(), active_nodes.end(),
                                            [](const auto& a) { return a->requires_grad; });
        if (any_active) {
          std::vector<double> dx(count * pk, 0.0);
          for (const auto& seg : segments) {
            kernels::gemm({false, false, seg.rows, seg.hi - seg.lo, n}, g.data(), n, w + seg.lo,
                          pk, 0.0, dx.data() + seg.lo, pk);
          }
          for (std::size_t r = 0; r < count; ++r) {
            auto& node = active_nodes[order[r]];
            if (!node->requires_grad) continue;
            const std::size_t len = lens[order[r]];
            auto ga = node->ensure_grad();
            const double* row = dx.data() + r * pk;
            for (std::size_t k = 0; k < k_ch; ++k) {
              for (std::size_t p = 0; p < len; ++p) ga[k * len + p] += row[p * k_ch + k];
            }
          }
        }
        if (!tn->requires_grad && !wn->requires_grad) return;

        // v[i * P + p] = sum of g[r][i] over rows whose position p is tail.
        std::vector<double> v(n * positions, 0.0);
        std::vector<double> acc(n, 0.0);
        std::size_t next = count;  // rows [next, count) have len <= p
        for (std::size_t p = 0; p < positions; ++p) {
          while (next > 0 && lens[order[next - 1]] <= p) {
            --next;
            for (std::size_t i = 0; i < n; ++i) acc[i] += g[next * n + i];
          }
          for (std::size_t i = 0; i < n; ++i) v[i * positions + p] = acc[i];
        }
        if (wn->requires_grad) {
          kernels::gemm({false, false, n * positions, k_ch, 1}, v.data(), 1, tn->value.data(),
                        k_ch, 1.0, wn->ensure_grad().data(), k_ch);
        }
        if (tn->requires_grad) {
          const auto& kt = kernels::active();
          double* gt = tn->ensure_grad().data();
          for (std::size_t q = 0; q < n * positions; ++q) {
            if (v[q] != 0.0) kt.axpy(v[q], w + q * k_ch, gt, k_ch);
          }
        }
      });
}

}  // namespace pshield::nn
