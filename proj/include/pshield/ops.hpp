// Differentiable layers and utility ops over Tensor.
//
// Most ops accept an optional leading batch dimension: a shape written as
// [C x L] below also accepts [B x C x L] and then applies per sample.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pshield/random.hpp"
#include "pshield/tensor.hpp"

namespace pshield::nn {

// input [C x L], kernels [K x C x w], bias [K] -> [K x ((L - w) / stride + 1)].
// One-hot style inputs that need no gradient take a sparse scatter path.
Tensor conv1d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              std::size_t stride = 1);

// input [K x L] -> [K x ((L - window) / stride + 1)]; stride 0 means window.
// Gradient goes to the first maximal element of each window.
Tensor maxpool1d(const Tensor& input, std::size_t window, std::size_t stride = 0);

// input [m], weights [n x m], bias [n] -> [n].
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

enum class Activation { relu, tanh, sigmoid };
Tensor activation(const Tensor& input, Activation kind);
inline Tensor relu(const Tensor& x) { return activation(x, Activation::relu); }
inline Tensor tanh(const Tensor& x) { return activation(x, Activation::tanh); }
inline Tensor sigmoid(const Tensor& x) { return activation(x, Activation::sigmoid); }

// Inverted dropout; p_drop in [0, 1). Identity when !training or p_drop == 0.
Tensor dropout(const Tensor& input, double p_drop, bool training, Rng& rng);

// codes in [0, V), table [V x d] -> [len x d].
Tensor embedding(std::span<const int> codes, const Tensor& table);

struct LstmParams {
  Tensor input_weights;      // [4H x d], gate order i, f, g, o
  Tensor recurrent_weights;  // [4H x H]
  Tensor bias;               // [4H]

  std::size_t hidden() const { return bias.size() / 4; }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

// One cell step on x [d] (or [B x d]) and state h, c [H] (or [B x H]).
LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmParams& params);

// Fused form of lstm_step over a packed state hc = [h | c], [B x 2H].
Tensor lstm_cell(const Tensor& x, const Tensor& hc, const LstmParams& params);

// seq [len x d] -> [2H]: final forward state then final backward state.
// An empty sequence yields zeros.
Tensor bilstm(const Tensor& seq, const LstmParams& forward, const LstmParams& backward);
// Batched form over sequences of differing lengths -> [B x 2H].
Tensor bilstm_batch(std::span<const Tensor> seqs, const LstmParams& forward,
                    const LstmParams& backward);

inline constexpr double kProbClamp = 1e-12;
// Mean binary cross-entropy over scores [B] (any shape with B elements).
Tensor bce_loss(const Tensor& scores, std::span<const double> labels);
Tensor bce_loss(const Tensor& score, double label);

// Shape and arithmetic utilities.
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat_cols(const Tensor& a, const Tensor& b);  // [R x p], [R x q] -> [R x (p+q)]
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor stack(std::span<const Tensor> items);  // n x shape -> [n x shape]
Tensor select(const Tensor& x, std::size_t index);  // [n x rest] -> [rest]
Tensor transpose2d(const Tensor& x);                 // [R x C] -> [C x R]
Tensor sum(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
// Row r is taken from `fresh` where mask[r] != 0, else from `keep`.
Tensor blend_rows(const Tensor& fresh, const Tensor& keep, std::span<const std::uint8_t> mask);
// Time-major padding: out[t][b] = seqs[b][t] (or reversed within its length),
// zero past each sequence's end. seqs are [len_b x d] -> [T x B x d].
Tensor pad_sequences(std::span<const Tensor> seqs, bool reverse);

// Fused dense layer over max-pooled features whose trailing columns are a
// constant per-channel vector.
//
// Conceptually, sample s has a feature map F_s [K x P] with
//   F_s[:, p] = active_s[:, p] for p < A_s, and tail[:] otherwise.
// The result is out[s] = W [n x P*K] * f_s + b, shape [S x n], where
// f_s[p*K + k] = F_s[k][p] (position-major flattening). active_s is
// [K x A_s] with A_s <= P. Gradients flow to every active_s, tail, W and b.
// Equal up to summation order to materializing F_s and calling dense.
Tensor dense_padded_tail(std::span<const Tensor> active, const Tensor& tail,
                         std::size_t positions, const Tensor& weights, const Tensor& bias);

}  // namespace pshield::nn
