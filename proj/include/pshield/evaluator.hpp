// ROC/AUC, TPR at FPR budgets, confusion matrices, stratified folds and
// command-length statistics.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pshield {

struct ScoredItem {
  double score = 0.0;
  bool malicious = false;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  // Items with score >= threshold are flagged; +inf for the (0, 0) point.
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0, 0) first, (1, 1) last
  double auc = 0.0;
};

// Throws std::invalid_argument unless both labels are present.
RocCurve roc_auc(std::span<const ScoredItem> data);
void write_roc_csv(const RocCurve& roc, std::ostream& out);

struct OperatingPoint {
  double tpr = 0.0;
  double fpr = 0.0;
  double threshold = 0.0;
};

// Lowest threshold t with FPR(t) <= budget under the rule score >= t.
// Candidates are the distinct scores plus one value just above the maximum.
OperatingPoint tpr_at_fpr(std::span<const ScoredItem> data, double budget);

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_at(std::span<const ScoredItem> data, double threshold);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Stratified: each class is shuffled with the seed, then the malicious and
// clean lists are dealt round-robin with one running cursor, so fold sizes
// differ by at most one overall and per class.
std::vector<Fold> kfold_split(std::span<const bool> malicious, std::size_t k, std::uint64_t seed);

struct LengthSample {
  std::size_t length = 0;
  bool malicious = false;
};

struct LengthRow {
  std::size_t total = 0;
  // counts[i] holds lengths <= edges[i] not counted earlier; the last entry
  // is the overflow bucket.
  std::vector<std::size_t> counts;
  double fraction_le_1024 = 0.0;
  double fraction_le_2000 = 0.0;
  // Nearest-rank quantiles at kLengthQuantiles; zero for an empty class.
  std::vector<std::size_t> quantiles;
};

inline constexpr double kLengthQuantiles[] = {0.5, 0.9, 0.99};

struct LengthHistogram {
  std::vector<std::size_t> edges;
  LengthRow malicious;
  LengthRow clean;
  LengthRow all;
};

// `edges` must be strictly increasing.
LengthHistogram length_histogram(std::span<const LengthSample> samples,
                                 std::vector<std::size_t> edges);
std::string length_histogram_json(const LengthHistogram& h);
std::string length_histogram_text(const LengthHistogram& h);

inline constexpr double kDefaultBudgets[] = {1e-2, 1e-3, 1e-4};

struct BudgetResult {
  double budget = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double threshold = 0.0;  // NaN in a fold average
  ConfusionMatrix confusion;
};

struct EvalReport {
  std::string model;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double auc = 0.0;
  std::vector<BudgetResult> budgets;
  // Per-fold reports when this one is a cross-validation average.
  std::vector<EvalReport> folds;
};

EvalReport evaluate_scores(const std::string& model, std::span<const ScoredItem> data,
                           std::span<const double> budgets = kDefaultBudgets);
// Mean AUC and TPR/FPR per budget; confusion matrices are summed.
EvalReport average_folds(const std::string& model, std::vector<EvalReport> folds);

// AUC is shown rounded to three decimals; JSON carries full precision too.
std::string reports_json(std::span<const EvalReport> reports);
std::string reports_text(std::span<const EvalReport> reports);

}  // namespace pshield
