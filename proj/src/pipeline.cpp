#include "pshield/pipeline.hpp"

#include <unordered_map>

namespace pshield {
namespace {

std::vector<LabeledExample> subset(std::span<const LabeledExample> data,
                                   const std::vector<std::size_t>& idx) {
  std::vector<LabeledExample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data[i]);
  return out;
}

std::vector<bool> labels_of(std::span<const LabeledExample> data) {
  std::vector<bool> out;
  for (const auto& ex : data) out.push_back(ex.malicious);
  return out;
}

std::vector<Fold> folds_for(std::span<const LabeledExample> data, std::size_t k,
                            std::uint64_t seed) {
  const auto labels = labels_of(data);
  std::unique_ptr<bool[]> flat(new bool[labels.size()]);
  for (std::size_t i = 0; i < labels.size(); ++i) flat[i] = labels[i];
  return kfold_split(std::span<const bool>(flat.get(), labels.size()), k, seed);
}

}  // namespace

std::vector<LabeledCommand> preprocess_corpus(std::span<const LabeledCommand> corpus,
                                              PreprocessStats* stats) {
  PreprocessStats s;
  s.input = corpus.size();
  std::vector<LabeledCommand> out;
  std::unordered_map<std::string, bool> seen;  // case key -> label
  for (const auto& c : corpus) {
    const NormalizedCommand n = preprocess(RawCommand{c.command, ""});
    s.decoded += n.was_base64_decoded;
    s.decode_warnings += n.decode_warning.has_value();
    auto [it, fresh] = seen.emplace(case_key(n).key, c.malicious);
    if (!fresh) {
      s.label_conflicts += it->second != c.malicious;
      continue;
    }
    LabeledCommand kept = c;
    kept.command = n.text;
    out.push_back(std::move(kept));
  }
  s.output = out.size();
  if (stats) *stats = s;
  return out;
}

std::vector<LabeledExample> to_examples(std::span<const LabeledCommand> corpus) {
  std::vector<LabeledExample> out;
  out.reserve(corpus.size());
  for (const auto& c : corpus) out.push_back({preprocess(RawCommand{c.command, ""}), c.malicious});
  return out;
}

std::string model_label(const ModelSpec& spec) {
  std::string name(to_string(spec.kind));
  if ((spec.kind == ModelKind::cnn4 || spec.kind == ModelKind::cnn9) && !spec.case_bit) name += "*";
  return name;
}

CrossValidationResult cross_validate(std::span<const LabeledExample> data,
                                     const CrossValidationConfig& cfg) {
  if (cfg.models.empty()) throw std::invalid_argument("cross_validate: no models");
  const auto folds = folds_for(data, cfg.folds, cfg.seed);
  const auto log = [&](const std::string& msg) {
    if (cfg.log) cfg.log(msg);
  };

  std::ptrdiff_t deep = -1, linear = -1;
  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    auto& slot = is_deep(cfg.models[m].kind) ? deep : linear;
    if (slot < 0) slot = static_cast<std::ptrdiff_t>(m);
  }
  const bool with_ensemble = cfg.ensemble && deep >= 0 && linear >= 0;
  const std::string ensemble_name =
      with_ensemble ? "ensemble(" + model_label(cfg.models[static_cast<std::size_t>(deep)]) + "," +
                          model_label(cfg.models[static_cast<std::size_t>(linear)]) + ")"
                    : "";

  std::vector<std::string> names;
  for (const auto& spec : cfg.models) names.push_back(model_label(spec));
  std::vector<std::vector<EvalReport>> per_model(cfg.models.size() + (with_ensemble ? 1 : 0));
  CrossValidationResult result;

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto train = subset(data, folds[f].train);
    const auto valid = subset(data, folds[f].validation);
    std::vector<NormalizedCommand> valid_cmds;
    for (const auto& ex : valid) valid_cmds.push_back(ex.command);
    std::vector<std::vector<double>> scores(cfg.models.size());

    for (std::size_t m = 0; m < cfg.models.size(); ++m) {
      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(cfg.train.seed, 100 + f);
      const auto user_hook = cfg.train.on_epoch;
      tc.on_epoch = [&, m, f](std::size_t epoch, double loss) {
        log("fold " + std::to_string(f + 1) + " " + names[m] + " epoch " +
            std::to_string(epoch + 1) + " loss " + std::to_string(loss));
        if (user_hook) user_hook(epoch, loss);
      };
      TrainedModel trained = train_model(cfg.models[m], cfg.vocab, train, tc);
      scores[m] = trained.model->predict_scores(valid_cmds);
      std::vector<ScoredItem> items;
      for (std::size_t i = 0; i < valid.size(); ++i) items.push_back({scores[m][i], valid[i].malicious});
      per_model[m].push_back(evaluate_scores(names[m], items, cfg.budgets));
      log("fold " + std::to_string(f + 1) + " " + names[m] + " AUC " +
          std::to_string(per_model[m].back().auc));
      auto& pooled = result.pooled[names[m]];
      pooled.insert(pooled.end(), items.begin(), items.end());
    }
    if (with_ensemble) {
      std::vector<ScoredItem> items;
      const auto& d = scores[static_cast<std::size_t>(deep)];
      const auto& t = scores[static_cast<std::size_t>(linear)];
      for (std::size_t i = 0; i < valid.size(); ++i) {
        items.push_back({combine(d[i], t[i], cfg.ensemble_config), valid[i].malicious});
      }
      per_model.back().push_back(evaluate_scores(ensemble_name, items, cfg.budgets));
      auto& pooled = result.pooled[ensemble_name];
      pooled.insert(pooled.end(), items.begin(), items.end());
    }
  }
  for (std::size_t m = 0; m < per_model.size(); ++m) {
    const std::string& name = m < names.size() ? names[m] : ensemble_name;
    result.reports.push_back(average_folds(name, std::move(per_model[m])));
  }
  return result;
}

L2Selection select_l2(std::span<const LabeledExample> data, const ModelSpec& spec,
                      const TrainConfig& train, std::span<const double> grid, std::size_t folds,
                      std::uint64_t seed) {
  if (is_deep(spec.kind)) throw std::invalid_argument("select_l2: only for linear models");
  if (grid.empty()) throw std::invalid_argument("select_l2: empty grid");
  L2Selection sel;
  double best_auc = -1.0;
  for (double lambda : grid) {
    CrossValidationConfig cv;
    cv.folds = folds;
    cv.seed = seed;
    cv.train = train;
    cv.train.l2_lambda = lambda;
    cv.train.on_epoch = nullptr;
    cv.models = {spec};
    cv.ensemble = false;
    const double auc = cross_validate(data, cv).reports.front().auc;
    sel.auc_by_lambda.emplace_back(lambda, auc);
    if (auc > best_auc) {
      best_auc = auc;
      sel.best = lambda;
    }
  }
  return sel;
}

}  // namespace pshield
