// End-to-end steps shared by the command-line tool and the acceptance
// harness: corpus preprocessing, cross-validation and the L2 grid.
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pshield/corpus.hpp"
#include "pshield/ensemble.hpp"
#include "pshield/evaluator.hpp"
#include "pshield/models.hpp"
#include "pshield/trainer.hpp"

namespace pshield {

struct PreprocessStats {
  std::size_t input = 0;
  std::size_t output = 0;
  std::size_t decoded = 0;
  std::size_t decode_warnings = 0;
  std::size_t label_conflicts = 0;  // dropped duplicates whose label differed
};

// Normalizes every command and keeps the first of each case-equivalence
// class. The output command text is the normalized form.
std::vector<LabeledCommand> preprocess_corpus(std::span<const LabeledCommand> corpus,
                                              PreprocessStats* stats = nullptr);

// Normalizes (idempotently) for model input.
std::vector<LabeledExample> to_examples(std::span<const LabeledCommand> corpus);

// Display name: the kind, with "*" for a CNN without the case bit.
std::string model_label(const ModelSpec& spec);

using Logger = std::function<void(const std::string&)>;

struct CrossValidationConfig {
  std::size_t folds = 2;
  std::uint64_t seed = 1;  // fold assignment; training seeds derive from train.seed
  TrainConfig train;
  std::vector<ModelSpec> models;
  CharVocabulary vocab = CharVocabulary::pinned_default();
  // Adds the D/T ensemble of the first deep and first linear model.
  bool ensemble = true;
  EnsembleConfig ensemble_config;
  std::vector<double> budgets{std::begin(kDefaultBudgets), std::end(kDefaultBudgets)};
  Logger log;
};

struct CrossValidationResult {
  std::vector<EvalReport> reports;  // fold averages, models then ensemble
  // Validation scores pooled over folds, keyed by report name.
  std::map<std::string, std::vector<ScoredItem>> pooled;
};

CrossValidationResult cross_validate(std::span<const LabeledExample> data,
                                     const CrossValidationConfig& cfg);

struct L2Selection {
  double best = 0.0;
  std::vector<std::pair<double, double>> auc_by_lambda;
};

// Picks the L2 weight with the best k-fold AUC for a linear model; ties go
// to the earlier grid entry.
L2Selection select_l2(std::span<const LabeledExample> data, const ModelSpec& spec,
                      const TrainConfig& train, std::span<const double> grid, std::size_t folds,
                      std::uint64_t seed);

}  // namespace pshield
