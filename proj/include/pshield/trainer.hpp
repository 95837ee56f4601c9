// Mini-batch training loop shared by all detectors.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pshield/models.hpp"

namespace pshield {

struct TrainConfig {
  std::size_t epochs = 16;
  std::size_t batch_size = 128;
  std::uint64_t seed = 1;
  std::size_t duplication_factor = 8;
  double learning_rate = 0.01;
  double momentum = 0.9;
  // L2 penalty on the linear models' weight vector (not the bias).
  double l2_lambda = 1e-4;
  // Called after every epoch (0-based) with its mean training loss.
  std::function<void(std::size_t epoch, double loss)> on_epoch;
};

struct Fingerprint {
  std::uint64_t seed = 0;
  std::uint64_t corpus_hash = 0;
  std::size_t epochs = 0;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

struct TrainedModel {
  std::unique_ptr<Model> model;
  Fingerprint fingerprint;
  std::vector<double> epoch_losses;
};

// Seed streams derived from TrainConfig::seed.
enum class SeedStream : std::uint64_t { init = 1, shuffle = 2, dropout = 3 };

// FNV-1a over labels and texts in order.
std::uint64_t corpus_hash(std::span<const LabeledExample> data);

// Indices of one epoch before shuffling: every example once, then each
// malicious example factor - 1 more times.
std::vector<std::size_t> epoch_indices(std::span<const LabeledExample> data, std::size_t factor);

// Trains `model` in place. Throws std::invalid_argument("degenerate
// dataset") unless both classes are present, and on an invalid config.
TrainedModel train(std::unique_ptr<Model> model, std::span<const LabeledExample> data,
                   const TrainConfig& cfg);

// Builds the deep model from the config's init stream, then trains it.
TrainedModel train_deep(const ModelSpec& spec, const CharVocabulary& vocab,
                        std::span<const LabeledExample> data, const TrainConfig& cfg);

// Fits the featurizer on the training texts, then trains the linear model.
TrainedModel train_logreg(const ModelSpec& spec, std::span<const LabeledExample> data,
                          const TrainConfig& cfg);

// Dispatches on spec.kind.
TrainedModel train_model(const ModelSpec& spec, const CharVocabulary& vocab,
                         std::span<const LabeledExample> data, const TrainConfig& cfg);

}  // namespace pshield
