#include <algorithm>
#include <cmath>

#include "ops_common.hpp"
#include "pshield/kernels.hpp"
#include "pshield/ops.hpp"

namespace pshield::nn {
namespace {

double sigm(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void check_params(const LstmParams& p, std::size_t d) {
  const std::size_t h = p.hidden();
  if (p.bias.rank() != 1 || p.bias.size() % 4 != 0 || h == 0 || p.input_weights.rank() != 2 ||
      p.input_weights.dim(0) != 4 * h || p.input_weights.dim(1) != d ||
      p.recurrent_weights.rank() != 2 || p.recurrent_weights.dim(0) != 4 * h ||
      p.recurrent_weights.dim(1) != h) {
    throw ShapeError("lstm: input width " + std::to_string(d) + " with weights " +
                     shape_str(p.input_weights.shape()) + ", recurrent " +
                     shape_str(p.recurrent_weights.shape()) + ", bias " + shape_str(p.bias.shape()));
  }
}

}  // namespace

Tensor lstm_cell(const Tensor& x, const Tensor& hc, const LstmParams& params) {
  const auto bx = batch_of(x, 1, "lstm_cell");
  const auto bs = batch_of(hc, 1, "lstm_cell");
  const std::size_t d = x.shape().back();
  check_params(params, d);
  const std::size_t h = params.hidden();
  if (bx.count != bs.count || bx.batched != bs.batched || hc.shape().back() != 2 * h) {
    throw ShapeError("lstm_cell: input " + shape_str(x.shape()) + " with state " +
                     shape_str(hc.shape()) + " for hidden size " + std::to_string(h));
  }
  const std::size_t rows = bx.count;
  const std::size_t g4 = 4 * h;

  // z = x Wx^T + h Wh^T + b, then activated in place into gate order i, f, g, o.
  std::vector<double> gates(rows * g4);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(params.bias.values().begin(), params.bias.values().end(), gates.begin() + r * g4);
  }
  kernels::gemm({false, true, rows, g4, d}, x.values().data(), d,
                params.input_weights.values().data(), d, 1.0, gates.data(), g4);
  kernels::gemm({false, true, rows, g4, h}, hc.values().data(), 2 * h,
                params.recurrent_weights.values().data(), h, 1.0, gates.data(), g4);

  std::vector<double> out(rows * 2 * h);
  std::vector<double> tanh_c(rows * h);
  const double* prev = hc.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double* z = gates.data() + r * g4;
    for (std::size_t j = 0; j < h; ++j) {
      const double i = sigm(z[j]);
      const double f = sigm(z[h + j]);
      const double g = std::tanh(z[2 * h + j]);
      const double o = sigm(z[3 * h + j]);
      z[j] = i;
      z[h + j] = f;
      z[2 * h + j] = g;
      z[3 * h + j] = o;
      const double c = f * prev[r * 2 * h + h + j] + i * g;
      const double tc = std::tanh(c);
      tanh_c[r * h + j] = tc;
      out[r * 2 * h + j] = o * tc;
      out[r * 2 * h + h + j] = c;
    }
  }

  Shape shape = bx.batched ? Shape{rows, 2 * h} : Shape{2 * h};
  auto xn = x.node();
  auto sn = hc.node();
  auto wx = params.input_weights.node();
  auto wh = params.recurrent_weights.node();
  auto bn = params.bias.node();
  return Tensor::make_result(
      "lstm_cell", std::move(shape), std::move(out),
      {x, hc, params.input_weights, params.recurrent_weights, params.bias},
      [xn, sn, wx, wh, bn, rows, d, h, g4, gates = std::move(gates),
       tanh_c = std::move(tanh_c)](detail::Node& self) {
        std::vector<double> dz(rows * g4);
        std::vector<double> dc_prev(rows * h);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gt = gates.data() + r * g4;
          const double* go = self.grad.data() + r * 2 * h;
          const double* cprev = sn->value.data() + r * 2 * h + h;
          double* z = dz.data() + r * g4;
          for (std::size_t j = 0; j < h; ++j) {
            const double i = gt[j], f = gt[h + j], g = gt[2 * h + j], o = gt[3 * h + j];
            const double tc = tanh_c[r * h + j];
            const double dh = go[j];
            const double dc = go[h + j] + dh * o * (1.0 - tc * tc);
            z[j] = dc * g * i * (1.0 - i);
            z[h + j] = dc * cprev[j] * f * (1.0 - f);
            z[2 * h + j] = dc * i * (1.0 - g * g);
            z[3 * h + j] = dh * tc * o * (1.0 - o);
            dc_prev[r * h + j] = dc * f;
          }
        }
        if (bn->requires_grad) {
          auto gb = bn->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t k = 0; k < g4; ++k) gb[k] += dz[r * g4 + k];
          }
        }
        if (wx->requires_grad) {
          kernels::gemm({true, false, g4, d, rows}, dz.data(), g4, xn->value.data(), d, 1.0,
                        wx->ensure_grad().data(), d);
        }
        if (wh->requires_grad) {
          kernels::gemm({true, false, g4, h, rows}, dz.data(), g4, sn->value.data(), 2 * h, 1.0,
                        wh->ensure_grad().data(), h);
        }
        if (xn->requires_grad) {
          kernels::gemm({false, false, rows, d, g4}, dz.data(), g4, wx->value.data(), d, 1.0,
                        xn->ensure_grad().data(), d);
        }
        if (sn->requires_grad) {
          auto gs = sn->ensure_grad();
          kernels::gemm({false, false, rows, h, g4}, dz.data(), g4, wh->value.data(), h, 1.0,
                        gs.data(), 2 * h);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < h; ++j) gs[r * 2 * h + h + j] += dc_prev[r * h + j];
          }
        }
      });
}

LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmParams& params) {
  const std::size_t h = params.hidden();
  const Tensor next = lstm_cell(x, concat_cols(state.h, state.c), params);
  return {slice_cols(next, 0, h), slice_cols(next, h, 2 * h)};
}

namespace {

Tensor run_direction(std::span<const Tensor> seqs, const LstmParams& params, bool reverse) {
  const std::size_t batch = seqs.size();
  const std::size_t h = params.hidden();
  const Tensor steps = pad_sequences(seqs, reverse);
  Tensor state = Tensor::zeros({batch, 2 * h});
  std::vector<std::uint8_t> mask(batch);
  for (std::size_t t = 0; t < steps.dim(0); ++t) {
    bool all = true;
    for (std::size_t b = 0; b < batch; ++b) {
      mask[b] = t < seqs[b].dim(0);
      all = all && mask[b];
    }
    const Tensor next = lstm_cell(select(steps, t), state, params);
    state = all ? next : blend_rows(next, state, mask);
  }
  return slice_cols(state, 0, h);
}

}  // namespace

Tensor bilstm_batch(std::span<const Tensor> seqs, const LstmParams& forward,
                    const LstmParams& backward) {
  if (seqs.empty()) throw ShapeError("bilstm: no sequences");
  std::size_t longest = 0;
  for (const auto& s : seqs) {
    if (s.rank() != 2) throw ShapeError("bilstm: expected [len x d], got " + shape_str(s.shape()));
    check_params(forward, s.dim(1));
    check_params(backward, s.dim(1));
    longest = std::max(longest, s.dim(0));
  }
  if (longest == 0) return Tensor::zeros({seqs.size(), forward.hidden() + backward.hidden()});
  return concat_cols(run_direction(seqs, forward, false), run_direction(seqs, backward, true));
}

Tensor bilstm(const Tensor& seq, const LstmParams& forward, const LstmParams& backward) {
  const Tensor one[1] = {seq};
  return reshape(bilstm_batch(one, forward, backward), {forward.hidden() + backward.hidden()});
}

}  // namespace pshield::nn
