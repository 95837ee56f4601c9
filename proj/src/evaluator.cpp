#include "pshield/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "pshield/random.hpp"

namespace pshield {
namespace {

using json = nlohmann::ordered_json;

// Equal-score groups in descending score order with per-group label counts.
struct Group {
  double score;
  std::size_t pos;
  std::size_t neg;
};

std::vector<Group> groups_desc(std::span<const ScoredItem> data, std::size_t& pos,
                               std::size_t& neg) {
  std::vector<ScoredItem> sorted(data.begin(), data.end());
  for (const auto& it : sorted) {
    if (std::isnan(it.score)) throw std::invalid_argument("score is NaN");
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredItem& a, const ScoredItem& b) { return a.score > b.score; });
  std::vector<Group> out;
  pos = neg = 0;
  for (const auto& it : sorted) {
    if (out.empty() || out.back().score != it.score) out.push_back({it.score, 0, 0});
    (it.malicious ? out.back().pos : out.back().neg) += 1;
    (it.malicious ? pos : neg) += 1;
  }
  return out;
}

void require_both(std::size_t pos, std::size_t neg, const char* op) {
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument(std::string(op) + ": needs both malicious and clean items");
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

json confusion_json(const ConfusionMatrix& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

json report_json(const EvalReport& r) {
  json j;
  j["model"] = r.model;
  j["positives"] = r.positives;
  j["negatives"] = r.negatives;
  j["auc"] = r.auc;
  j["auc_display"] = fmt("%.3f", r.auc);
  json budgets = json::array();
  for (const auto& b : r.budgets) {
    json e;
    e["fpr_budget"] = b.budget;
    e["tpr"] = b.tpr;
    e["fpr"] = b.fpr;
    e["threshold"] = std::isnan(b.threshold) ? json(nullptr) : json(b.threshold);
    e["confusion"] = confusion_json(b.confusion);
    budgets.push_back(std::move(e));
  }
  j["tpr_at_fpr"] = std::move(budgets);
  if (!r.folds.empty()) {
    json folds = json::array();
    for (const auto& f : r.folds) folds.push_back(report_json(f));
    j["folds"] = std::move(folds);
  }
  return j;
}

json row_json(const LengthRow& r) {
  return {{"total", r.total},
          {"counts", r.counts},
          {"fraction_le_1024", r.fraction_le_1024},
          {"fraction_le_2000", r.fraction_le_2000},
          {"quantiles", r.quantiles}};
}

}  // namespace

RocCurve roc_auc(std::span<const ScoredItem> data) {
  std::size_t pos = 0, neg = 0;
  const auto groups = groups_desc(data, pos, neg);
  require_both(pos, neg, "roc_auc");
  RocCurve roc;
  roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  double twice_area = 0.0;  // in units of one (pos, neg) pair
  for (const auto& g : groups) {
    twice_area += static_cast<double>(g.neg) * static_cast<double>(2 * tp + g.pos);
    tp += g.pos;
    fp += g.neg;
    roc.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos), g.score});
  }
  roc.auc = twice_area / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return roc;
}

void write_roc_csv(const RocCurve& roc, std::ostream& out) {
  out << "fpr,tpr,threshold\n";
  char buf[128];
  for (const auto& p : roc.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.fpr, p.tpr, p.threshold);
    out << buf;
  }
}

OperatingPoint tpr_at_fpr(std::span<const ScoredItem> data, double budget) {
  if (!(budget >= 0.0 && budget <= 1.0)) {
    throw std::invalid_argument("tpr_at_fpr: budget must be in [0, 1]");
  }
  std::size_t pos = 0, neg = 0;
  const auto groups = groups_desc(data, pos, neg);
  require_both(pos, neg, "tpr_at_fpr");
  OperatingPoint best{0.0, 0.0,
                      std::nextafter(groups.front().score, std::numeric_limits<double>::infinity())};
  std::size_t tp = 0, fp = 0;
  for (const auto& g : groups) {
    tp += g.pos;
    fp += g.neg;
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    if (fpr > budget) break;
    best = {static_cast<double>(tp) / static_cast<double>(pos), fpr, g.score};
  }
  return best;
}

ConfusionMatrix confusion_at(std::span<const ScoredItem> data, double threshold) {
  ConfusionMatrix c;
  for (const auto& it : data) {
    const bool flagged = it.score >= threshold;
    if (it.malicious) {
      (flagged ? c.tp : c.fn) += 1;
    } else {
      (flagged ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

std::vector<Fold> kfold_split(std::span<const bool> malicious, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > malicious.size()) {
    throw std::invalid_argument("kfold_split: k must be in [2, " +
                                std::to_string(malicious.size()) + "], got " + std::to_string(k));
  }
  std::vector<std::size_t> mal, clean;
  for (std::size_t i = 0; i < malicious.size(); ++i) (malicious[i] ? mal : clean).push_back(i);
  Rng rng(seed);
  rng.shuffle(std::span(mal));
  rng.shuffle(std::span(clean));
  std::vector<std::size_t> fold_of(malicious.size());
  std::size_t cursor = 0;
  for (const auto* list : {&mal, &clean}) {
    for (std::size_t i : *list) fold_of[i] = cursor++ % k;
  }
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < malicious.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].validation : folds[f].train).push_back(i);
  }
  return folds;
}

LengthHistogram length_histogram(std::span<const LengthSample> samples,
                                 std::vector<std::size_t> edges) {
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) {
      throw std::invalid_argument("length_histogram: bucket edges must be strictly increasing");
    }
  }
  LengthHistogram h;
  h.edges = std::move(edges);
  auto fill = [&](LengthRow& row, auto keep) {
    std::vector<std::size_t> lens;
    for (const auto& s : samples) {
      if (keep(s)) lens.push_back(s.length);
    }
    std::sort(lens.begin(), lens.end());
    row.total = lens.size();
    row.counts.assign(h.edges.size() + 1, 0);
    std::size_t le1024 = 0, le2000 = 0;
    for (std::size_t len : lens) {
      const auto b = std::lower_bound(h.edges.begin(), h.edges.end(), len) - h.edges.begin();
      row.counts[static_cast<std::size_t>(b)] += 1;
      le1024 += len <= 1024;
      le2000 += len <= 2000;
    }
    const double n = static_cast<double>(lens.size());
    row.fraction_le_1024 = lens.empty() ? 0.0 : static_cast<double>(le1024) / n;
    row.fraction_le_2000 = lens.empty() ? 0.0 : static_cast<double>(le2000) / n;
    row.quantiles.clear();
    for (double q : kLengthQuantiles) {
      if (lens.empty()) {
        row.quantiles.push_back(0);
        continue;
      }
      const auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
      row.quantiles.push_back(lens[std::max<std::size_t>(rank, 1) - 1]);
    }
  };
  fill(h.malicious, [](const LengthSample& s) { return s.malicious; });
  fill(h.clean, [](const LengthSample& s) { return !s.malicious; });
  fill(h.all, [](const LengthSample&) { return true; });
  return h;
}

std::string length_histogram_json(const LengthHistogram& h) {
  json j;
  j["bucket_edges"] = h.edges;
  j["quantile_levels"] = kLengthQuantiles;
  j["malicious"] = row_json(h.malicious);
  j["clean"] = row_json(h.clean);
  j["all"] = row_json(h.all);
  return j.dump(2) + "\n";
}

std::string length_histogram_text(const LengthHistogram& h) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %10s %10s %10s\n", "bucket", "malicious", "clean", "all");
  out += buf;
  for (std::size_t b = 0; b <= h.edges.size(); ++b) {
    std::string label = b < h.edges.size() ? "<= " + std::to_string(h.edges[b])
                                            : (h.edges.empty() ? std::string("any")
                                                               : "> " + std::to_string(h.edges.back()));
    std::snprintf(buf, sizeof buf, "%-12s %10zu %10zu %10zu\n", label.c_str(), h.malicious.counts[b],
                  h.clean.counts[b], h.all.counts[b]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-12s %10zu %10zu %10zu\n", "total", h.malicious.total,
                h.clean.total, h.all.total);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s %10.4f %10.4f %10.4f\n", "<=1024", h.malicious.fraction_le_1024,
                h.clean.fraction_le_1024, h.all.fraction_le_1024);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s %10.4f %10.4f %10.4f\n", "<=2000", h.malicious.fraction_le_2000,
                h.clean.fraction_le_2000, h.all.fraction_le_2000);
  out += buf;
  for (std::size_t q = 0; q < std::size(kLengthQuantiles); ++q) {
    const std::string label = "p" + fmt("%g", kLengthQuantiles[q] * 100);
    std::snprintf(buf, sizeof buf, "%-12s %10zu %10zu %10zu\n", label.c_str(), h.malicious.quantiles[q],
                  h.clean.quantiles[q], h.all.quantiles[q]);
    out += buf;
  }
  return out;
}

EvalReport evaluate_scores(const std::string& model, std::span<const ScoredItem> data,
                           std::span<const double> budgets) {
  EvalReport r;
  r.model = model;
  r.auc = roc_auc(data).auc;
  for (const auto& it : data) (it.malicious ? r.positives : r.negatives) += 1;
  for (double budget : budgets) {
    const auto op = tpr_at_fpr(data, budget);
    r.budgets.push_back({budget, op.tpr, op.fpr, op.threshold, confusion_at(data, op.threshold)});
  }
  return r;
}

EvalReport average_folds(const std::string& model, std::vector<EvalReport> folds) {
  if (folds.empty()) throw std::invalid_argument("average_folds: no folds");
  EvalReport r;
  r.model = model;
  r.budgets = folds.front().budgets;
  for (auto& b : r.budgets) {
    b.tpr = b.fpr = 0.0;
    b.threshold = std::numeric_limits<double>::quiet_NaN();
    b.confusion = {};
  }
  const double n = static_cast<double>(folds.size());
  for (const auto& f : folds) {
    if (f.budgets.size() != r.budgets.size()) {
      throw std::invalid_argument("average_folds: folds use different budgets");
    }
    r.positives += f.positives;
    r.negatives += f.negatives;
    r.auc += f.auc / n;
    for (std::size_t i = 0; i < r.budgets.size(); ++i) {
      auto& b = r.budgets[i];
      b.tpr += f.budgets[i].tpr / n;
      b.fpr += f.budgets[i].fpr / n;
      b.confusion.tp += f.budgets[i].confusion.tp;
      b.confusion.fp += f.budgets[i].confusion.fp;
      b.confusion.tn += f.budgets[i].confusion.tn;
      b.confusion.fn += f.budgets[i].confusion.fn;
    }
  }
  r.folds = std::move(folds);
  return r;
}

std::string reports_json(std::span<const EvalReport> reports) {
  json j;
  j["models"] = json::array();
  for (const auto& r : reports) j["models"].push_back(report_json(r));
  return j.dump(2) + "\n";
}

std::string reports_text(std::span<const EvalReport> reports) {
  std::string out;
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s  (%zu malicious, %zu clean%s)\n  AUC %.3f\n", r.model.c_str(),
                  r.positives, r.negatives,
                  r.folds.empty() ? "" : (", mean of " + std::to_string(r.folds.size()) + " folds").c_str(),
                  r.auc);
    out += buf;
    std::snprintf(buf, sizeof buf, "  %-10s %8s %10s %12s %8s %8s %8s %8s\n", "FPR budget", "TPR", "FPR",
                  "threshold", "TP", "FP", "TN", "FN");
    out += buf;
    for (const auto& b : r.budgets) {
      const std::string thr = std::isnan(b.threshold) ? "-" : fmt("%.6g", b.threshold);
      std::snprintf(buf, sizeof buf, "  %-10.0e %8.4f %10.2e %12s %8zu %8zu %8zu %8zu\n", b.budget, b.tpr,
                    b.fpr, thr.c_str(), b.confusion.tp, b.confusion.fp, b.confusion.tn, b.confusion.fn);
      out += buf;
    }
  }
  return out;
}

}  // namespace pshield
