// The five detectors: 4-CNN, 9-CNN, BiLSTM and two logistic regressions.
//
// Every model maps a batch of normalized commands to maliciousness scores in
// [0, 1]. Deep models own a CharVocabulary; linear models own a fitted
// featurizer vocabulary.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pshield/encoder.hpp"
#include "pshield/featurizer.hpp"
#include "pshield/normalizer.hpp"
#include "pshield/random.hpp"
#include "pshield/tensor.hpp"

namespace pshield {

enum class ModelKind { cnn4, cnn9, lstm, ngram3_logreg, bow_logreg };

std::string_view to_string(ModelKind kind);
// Accepts the canonical names plus the short forms "ngram3" and "bow".
ModelKind parse_model_kind(std::string_view name);
inline bool is_deep(ModelKind kind) {
  return kind == ModelKind::cnn4 || kind == ModelKind::cnn9 || kind == ModelKind::lstm;
}

struct ModelSpec {
  ModelKind kind = ModelKind::cnn4;
  std::size_t max_len = kDefaultMaxLen;
  // CNNs only. false zeroes the case-bit row (the 4-CNN* variant).
  bool case_bit = true;
  std::size_t conv_filters = 128;
  std::vector<std::size_t> conv_widths{3};
  // Indices of conv layers followed by non-overlapping max pooling.
  std::vector<std::size_t> pool_after{0};
  std::size_t pool_size = 3;
  std::vector<std::size_t> fc_widths{1024, 1024};
  double dropout = 0.5;
  // LSTM only.
  std::size_t embedding_dim = 32;
  std::size_t lstm_hidden = 128;  // per direction
  // Linear models only.
  std::size_t ngram = 3;

  // The published architecture for each kind.
  static ModelSpec defaults(ModelKind kind);

  std::string to_json() const;
  static ModelSpec from_json(const std::string& json);

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Sequence length after the conv/pool stack of a CNN spec, or nullopt when
// some layer would see fewer columns than its window.
std::optional<std::size_t> cnn_output_length(const ModelSpec& spec, std::size_t input_len);
// Smallest max_len the conv/pool stack accepts.
std::size_t cnn_min_length(const ModelSpec& spec);

struct LayerShape {
  std::string name;
  nn::Shape shape;
};

struct LabeledExample {
  NormalizedCommand command;
  bool malicious = false;
};

class Model {
 public:
  virtual ~Model() = default;

  const ModelSpec& spec() const { return spec_; }
  std::vector<nn::Parameter>& parameter_list() { return params_; }
  const std::vector<nn::Parameter>& parameter_list() const { return params_; }
  std::vector<nn::Parameter*> parameters();
  std::size_t parameter_count() const;
  const nn::Parameter& parameter(std::string_view name) const;

  // Scores [B]. With a trace, records per-sample layer shapes of batch[0].
  virtual nn::Tensor forward(std::span<const NormalizedCommand> batch, bool training,
                             Rng& dropout_rng, std::vector<LayerShape>* trace = nullptr) const = 0;

  // Serialized input representation (character or featurizer vocabulary).
  virtual std::string input_json() const = 0;

  // Inference-mode score for one command; deterministic.
  double predict_score(const NormalizedCommand& cmd) const;
  // Batched scoring. May differ from predict_score in the last bits because
  // the batched kernels sum in a different order.
  std::vector<double> predict_scores(std::span<const NormalizedCommand> cmds,
                                     std::size_t batch_size = 128) const;

 protected:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  // The reference is invalidated by the next add_parameter call.
  nn::Parameter& add_parameter(std::string name, nn::Shape shape, std::vector<double> values);

 private:
  ModelSpec spec_;
  std::vector<nn::Parameter> params_;
};

// Deep model builders. Throw std::invalid_argument on a spec that does not
// fit the vocabulary or max_len.
std::unique_ptr<Model> build_cnn4(const ModelSpec& spec, const CharVocabulary& vocab, Rng& init);
std::unique_ptr<Model> build_cnn9(const ModelSpec& spec, const CharVocabulary& vocab, Rng& init);
std::unique_ptr<Model> build_lstm(const ModelSpec& spec, const CharVocabulary& vocab, Rng& init);
std::unique_ptr<Model> build_deep(const ModelSpec& spec, const CharVocabulary& vocab, Rng& init);

// Linear model over features fitted on `corpus`; weights start at zero.
std::unique_ptr<Model> build_logreg(const ModelSpec& spec,
                                    std::span<const NormalizedCommand> corpus);

// Rebuild a model from its spec, serialized input representation and
// parameter values (in parameter_list order).
std::unique_ptr<Model> restore_model(const ModelSpec& spec, const std::string& input_json,
                                     std::vector<std::vector<double>> values);

}  // namespace pshield
