#include <algorithm>
#include <cmath>

#include "ops_common.hpp"
#include "pshield/kernels.hpp"
#include "pshield/ops.hpp"

namespace pshield::nn {

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  const auto b = batch_of(input, 1, "dense");
  if (weights.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weights.dim(0) ||
      input.shape().back() != weights.dim(1)) {
    throw ShapeError("dense: input " + shape_str(input.shape()) + " vs weights " +
                     shape_str(weights.shape()) + " and bias " + shape_str(bias.shape()));
  }
  const std::size_t m = weights.dim(1);
  const std::size_t n = weights.dim(0);
  std::vector<double> out(b.count * n);
  kernels::gemm({false, true, b.count, n, m}, input.values().data(), m, weights.values().data(),
                m, 0.0, out.data(), n);
  const auto bv = bias.values();
  for (std::size_t s = 0; s < b.count; ++s) {
    for (std::size_t i = 0; i < n; ++i) out[s * n + i] += bv[i];
  }
  Shape shape = b.batched ? Shape{b.count, n} : Shape{n};
  auto x = input.node();
  auto w = weights.node();
  auto bn = bias.node();
  const std::size_t rows = b.count;
  return Tensor::make_result(
      "dense", std::move(shape), std::move(out), {input, weights, bias},
      [x, w, bn, rows, m, n](detail::Node& self) {
        const double* g = self.grad.data();
        if (bn->requires_grad) {
          auto gb = bn->ensure_grad();
          for (std::size_t s = 0; s < rows; ++s) {
            for (std::size_t i = 0; i < n; ++i) gb[i] += g[s * n + i];
          }
        }
        if (w->requires_grad) {
          kernels::gemm({true, false, n, m, rows}, g, n, x->value.data(), m, 1.0,
                        w->ensure_grad().data(), m);
        }
        if (x->requires_grad) {
          kernels::gemm({false, false, rows, m, n}, g, n, w->value.data(), m, 1.0,
                        x->ensure_grad().data(), m);
        }
      });
}

Tensor activation(const Tensor& input, Activation kind) {
  const auto xv = input.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    switch (kind) {
      case Activation::relu:
        out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
        break;
      case Activation::tanh:
        out[i] = std::tanh(xv[i]);
        break;
      case Activation::sigmoid:
        out[i] = xv[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-xv[i]))
                              : std::exp(xv[i]) / (1.0 + std::exp(xv[i]));
        break;
    }
  }
  auto x = input.node();
  return Tensor::make_result(
      "activation", input.shape(), std::move(out), {input}, [x, kind](detail::Node& self) {
        auto gx = x->ensure_grad();
        const auto& g = self.grad;
        const auto& y = self.value;
        for (std::size_t i = 0; i < g.size(); ++i) {
          switch (kind) {
            case Activation::relu:
              if (x->value[i] > 0.0) gx[i] += g[i];
              break;
            case Activation::tanh:
              gx[i] += g[i] * (1.0 - y[i] * y[i]);
              break;
            case Activation::sigmoid:
              gx[i] += g[i] * y[i] * (1.0 - y[i]);
              break;
          }
        }
      });
}

Tensor dropout(const Tensor& input, double p_drop, bool training, Rng& rng) {
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    throw std::invalid_argument("dropout: probability must be in [0, 1)");
  }
  if (!training || p_drop == 0.0) return input;
  const double keep_scale = 1.0 / (1.0 - p_drop);
  std::vector<double> mask(input.size());
  for (double& m : mask) m = rng.uniform() < p_drop ? 0.0 : keep_scale;
  const auto xv = input.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * mask[i];
  auto x = input.node();
  return Tensor::make_result("dropout", input.shape(), std::move(out), {input},
                             [x, mask = std::move(mask)](detail::Node& self) {
                               auto gx = x->ensure_grad();
                               for (std::size_t i = 0; i < gx.size(); ++i) {
                                 gx[i] += self.grad[i] * mask[i];
                               }
                             });
}

Tensor embedding(std::span<const int> codes, const Tensor& table) {
  if (table.rank() != 2) throw ShapeError("embedding: table must be 2-D, got " + shape_str(table.shape()));
  const std::size_t v = table.dim(0);
  const std::size_t d = table.dim(1);
  std::vector<int> idx(codes.begin(), codes.end());
  std::vector<double> out(idx.size() * d);
  const auto tv = table.values();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= v) {
      throw std::out_of_range("embedding: code " + std::to_string(idx[r]) + " outside table of " +
                              std::to_string(v) + " rows");
    }
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(idx[r] * d), d, out.begin() + r * d);
  }
  auto t = table.node();
  const std::size_t len = idx.size();
  return Tensor::make_result("embedding", {len, d}, std::move(out), {table},
                             [t, idx = std::move(idx), d](detail::Node& self) {
                               auto gt = t->ensure_grad();
                               for (std::size_t r = 0; r < idx.size(); ++r) {
                                 double* dst = gt.data() + static_cast<std::size_t>(idx[r]) * d;
                                 for (std::size_t j = 0; j < d; ++j) dst[j] += self.grad[r * d + j];
                               }
                             });
}

Tensor bce_loss(const Tensor& scores, std::span<const double> labels) {
  if (scores.size() != labels.size() || labels.empty()) {
    throw ShapeError("bce_loss: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const auto sv = scores.values();
  const auto n = static_cast<double>(labels.size());
  std::vector<double> clamped(sv.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < sv.size(); ++i) {
    const double s = std::clamp(sv[i], kProbClamp, 1.0 - kProbClamp);
    clamped[i] = s;
    loss -= labels[i] * std::log(s) + (1.0 - labels[i]) * std::log(1.0 - s);
  }
  std::vector<double> y(labels.begin(), labels.end());
  auto x = scores.node();
  return Tensor::make_result(
      "bce_loss", {1}, {loss / n}, {scores},
      [x, clamped = std::move(clamped), y = std::move(y), n](detail::Node& self) {
        auto gx = x->ensure_grad();
        const double g = self.grad[0] / n;
        for (std::size_t i = 0; i < gx.size(); ++i) {
          const double s = clamped[i];
          gx[i] += g * (s - y[i]) / (s * (1.0 - s));
        }
      });
}

Tensor bce_loss(const Tensor& score, double label) {
  const double labels[1] = {label};
  return bce_loss(score, labels);
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  auto xn = x.node();
  return Tensor::make_result("reshape", std::move(shape), xn->value, {x}, [xn](detail::Node& self) {
    auto gx = xn->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

namespace {

struct Matrix2 {
  std::size_t rows;
  std::size_t cols;
};

Matrix2 as_matrix(const Tensor& t, const char* op) {
  if (t.rank() == 1) return {1, t.dim(0)};
  if (t.rank() == 2) return {t.dim(0), t.dim(1)};
  throw ShapeError(std::string(op) + ": expected 1-D or 2-D tensor, got " + shape_str(t.shape()));
}

}  // namespace

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  const auto ma = as_matrix(a, "concat_cols");
  const auto mb = as_matrix(b, "concat_cols");
  if (ma.rows != mb.rows || a.rank() != b.rank()) {
    throw ShapeError("concat_cols: " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t c = ma.cols + mb.cols;
  std::vector<double> out(ma.rows * c);
  for (std::size_t r = 0; r < ma.rows; ++r) {
    std::copy_n(a.values().begin() + static_cast<std::ptrdiff_t>(r * ma.cols), ma.cols,
                out.begin() + r * c);
    std::copy_n(b.values().begin() + static_cast<std::ptrdiff_t>(r * mb.cols), mb.cols,
                out.begin() + r * c + ma.cols);
  }
  Shape shape = a.rank() == 1 ? Shape{c} : Shape{ma.rows, c};
  auto an = a.node();
  auto bn = b.node();
  return Tensor::make_result(
      "concat_cols", std::move(shape), std::move(out), {a, b}, [an, bn, ma, mb, c](detail::Node& self) {
        for (std::size_t r = 0; r < ma.rows; ++r) {
          const double* g = self.grad.data() + r * c;
          if (an->requires_grad) {
            double* ga = an->ensure_grad().data() + r * ma.cols;
            for (std::size_t j = 0; j < ma.cols; ++j) ga[j] += g[j];
          }
          if (bn->requires_grad) {
            double* gb = bn->ensure_grad().data() + r * mb.cols;
            for (std::size_t j = 0; j < mb.cols; ++j) gb[j] += g[ma.cols + j];
          }
        }
      });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  const auto mx = as_matrix(x, "slice_cols");
  if (begin > end || end > mx.cols) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_str(x.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(mx.rows * w);
  for (std::size_t r = 0; r < mx.rows; ++r) {
    std::copy_n(x.values().begin() + static_cast<std::ptrdiff_t>(r * mx.cols + begin), w,
                out.begin() + r * w);
  }
  Shape shape = x.rank() == 1 ? Shape{w} : Shape{mx.rows, w};
  auto xn = x.node();
  return Tensor::make_result("slice_cols", std::move(shape), std::move(out), {x},
                             [xn, mx, begin, w](detail::Node& self) {
                               auto gx = xn->ensure_grad();
                               for (std::size_t r = 0; r < mx.rows; ++r) {
                                 for (std::size_t j = 0; j < w; ++j) {
                                   gx[r * mx.cols + begin + j] += self.grad[r * w + j];
                                 }
                               }
                             });
}

Tensor stack(std::span<const Tensor> items) {
  if (items.empty()) throw ShapeError("stack: no tensors");
  const Shape& inner = items[0].shape();
  const std::size_t each = items[0].size();
  std::vector<double> out;
  out.reserve(each * items.size());
  std::vector<Tensor> inputs(items.begin(), items.end());
  for (const auto& t : items) {
    if (t.shape() != inner) {
      throw ShapeError("stack: " + shape_str(t.shape()) + " differs from " + shape_str(inner));
    }
    out.insert(out.end(), t.values().begin(), t.values().end());
  }
  Shape shape{items.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  std::vector<std::shared_ptr<detail::Node>> nodes;
  for (const auto& t : items) nodes.push_back(t.node());
  return Tensor::make_result("stack", std::move(shape), std::move(out), std::move(inputs),
                             [nodes = std::move(nodes), each](detail::Node& self) {
                               for (std::size_t s = 0; s < nodes.size(); ++s) {
                                 if (!nodes[s]->requires_grad) continue;
                                 auto g = nodes[s]->ensure_grad();
                                 for (std::size_t i = 0; i < each; ++i) g[i] += self.grad[s * each + i];
                               }
                             });
}

Tensor select(const Tensor& x, std::size_t index) {
  if (x.rank() < 2 || index >= x.dim(0)) {
    throw ShapeError("select: index " + std::to_string(index) + " into " + shape_str(x.shape()));
  }
  Shape shape(x.shape().begin() + 1, x.shape().end());
  const std::size_t each = shape_size(shape);
  std::vector<double> out(x.values().begin() + static_cast<std::ptrdiff_t>(index * each),
                          x.values().begin() + static_cast<std::ptrdiff_t>((index + 1) * each));
  auto xn = x.node();
  return Tensor::make_result("select", std::move(shape), std::move(out), {x},
                             [xn, index, each](detail::Node& self) {
                               double* g = xn->ensure_grad().data() + index * each;
                               for (std::size_t i = 0; i < each; ++i) g[i] += self.grad[i];
                             });
}

Tensor transpose2d(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("transpose2d: expected 2-D, got " + shape_str(x.shape()));
  const std::size_t r = x.dim(0);
  const std::size_t c = x.dim(1);
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x.values()[i * c + j];
  }
  auto xn = x.node();
  return Tensor::make_result("transpose2d", {c, r}, std::move(out), {x}, [xn, r, c](detail::Node& self) {
    auto g = xn->ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
    }
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  auto xn = x.node();
  return Tensor::make_result("sum", {1}, {total}, {x}, [xn](detail::Node& self) {
    for (double& g : xn->ensure_grad()) g += self.grad[0];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  auto an = a.node();
  auto bn = b.node();
  return Tensor::make_result("add", a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
    for (auto* n : {an.get(), bn.get()}) {
      if (!n->requires_grad) continue;
      auto g = n->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul: " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  auto an = a.node();
  auto bn = b.node();
  return Tensor::make_result("mul", a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
    if (an->requires_grad) {
      auto g = an->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      auto g = bn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an->value[i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * factor;
  auto xn = x.node();
  return Tensor::make_result("scale", x.shape(), std::move(out), {x}, [xn, factor](detail::Node& self) {
    auto g = xn->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

Tensor blend_rows(const Tensor& fresh, const Tensor& keep, std::span<const std::uint8_t> mask) {
  const auto mf = as_matrix(fresh, "blend_rows");
  if (fresh.shape() != keep.shape() || mask.size() != mf.rows) {
    throw ShapeError("blend_rows: " + shape_str(fresh.shape()) + ", " + shape_str(keep.shape()) +
                     " with " + std::to_string(mask.size()) + " mask rows");
  }
  std::vector<double> out(fresh.size());
  for (std::size_t r = 0; r < mf.rows; ++r) {
    const auto& src = mask[r] ? fresh.values() : keep.values();
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * mf.cols), mf.cols, out.begin() + r * mf.cols);
  }
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  auto fn = fresh.node();
  auto kn = keep.node();
  return Tensor::make_result(
      "blend_rows", fresh.shape(), std::move(out), {fresh, keep},
      [fn, kn, m = std::move(m), mf](detail::Node& self) {
        for (std::size_t r = 0; r < mf.rows; ++r) {
          detail::Node* dst = m[r] ? fn.get() : kn.get();
          if (!dst->requires_grad) continue;
          double* g = dst->ensure_grad().data() + r * mf.cols;
          for (std::size_t j = 0; j < mf.cols; ++j) g[j] += self.grad[r * mf.cols + j];
        }
      });
}

Tensor pad_sequences(std::span<const Tensor> seqs, bool reverse) {
  if (seqs.empty()) throw ShapeError("pad_sequences: no sequences");
  std::size_t d = 0;
  std::size_t steps = 0;
  for (const auto& s : seqs) {
    if (s.rank() != 2) throw ShapeError("pad_sequences: expected [len x d], got " + shape_str(s.shape()));
    if (d == 0) d = s.dim(1);
    if (s.dim(1) != d) throw ShapeError("pad_sequences: feature width mismatch");
    steps = std::max(steps, s.dim(0));
  }
  const std::size_t batch = seqs.size();
  std::vector<double> out(steps * batch * d, 0.0);
  std::vector<std::size_t> lens;
  std::vector<std::shared_ptr<detail::Node>> nodes;
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t len = seqs[b].dim(0);
    lens.push_back(len);
    nodes.push_back(seqs[b].node());
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t src = reverse ? len - 1 - t : t;
      std::copy_n(seqs[b].values().begin() + static_cast<std::ptrdiff_t>(src * d), d,
                  out.begin() + (t * batch + b) * d);
    }
  }
  return Tensor::make_result(
      "pad_sequences", {steps, batch, d}, std::move(out), {seqs.begin(), seqs.end()},
      [nodes = std::move(nodes), lens = std::move(lens), batch, d, reverse](detail::Node& self) {
        for (std::size_t b = 0; b < batch; ++b) {
          if (!nodes[b]->requires_grad) continue;
          auto g = nodes[b]->ensure_grad();
          for (std::size_t t = 0; t < lens[b]; ++t) {
            const std::size_t src = reverse ? lens[b] - 1 - t : t;
            for (std::size_t j = 0; j < d; ++j) g[src * d + j] += self.grad[(t * batch + b) * d + j];
          }
        }
      });
}

}  // namespace pshield::nn
