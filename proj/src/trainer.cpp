#include "pshield/trainer.hpp"

#include <stdexcept>

#include "pshield/ops.hpp"
#include "pshield/optim.hpp"
#include "pshield/text.hpp"

namespace pshield {

std::uint64_t corpus_hash(std::span<const LabeledExample> data) {
  std::uint64_t h = text::fnv1a("");
  for (const auto& ex : data) {
    h = text::fnv1a(ex.malicious ? "1" : "0", h);
    h = text::fnv1a(ex.command.text, h);
    h = text::fnv1a("\n", h);
  }
  return h;
}

std::vector<std::size_t> epoch_indices(std::span<const LabeledExample> data, std::size_t factor) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(i);
  for (std::size_t copy = 1; copy < factor; ++copy) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].malicious) out.push_back(i);
    }
  }
  return out;
}

TrainedModel train(std::unique_ptr<Model> model, std::span<const LabeledExample> data,
                   const TrainConfig& cfg) {
  if (cfg.epochs == 0 || cfg.batch_size == 0 || cfg.duplication_factor == 0) {
    throw std::invalid_argument("train: epochs, batch size and duplication factor must be >= 1");
  }
  bool any_pos = false, any_neg = false;
  for (const auto& ex : data) (ex.malicious ? any_pos : any_neg) = true;
  if (!any_pos || !any_neg) throw std::invalid_argument("degenerate dataset");

  Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::shuffle)));
  Rng dropout_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::dropout)));
  nn::OptimizerState opt{cfg.learning_rate, cfg.momentum, {}};
  const auto params = model->parameters();
  const bool linear = !is_deep(model->spec().kind);

  TrainedModel result;
  std::vector<std::size_t> order = epoch_indices(data, cfg.duplication_factor);
  std::vector<NormalizedCommand> batch;
  std::vector<double> labels;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(data[order[i]].command);
        labels.push_back(data[order[i]].malicious ? 1.0 : 0.0);
      }
      const nn::Tensor loss = nn::bce_loss(model->forward(batch, true, dropout_rng), labels);
      total += loss.item() * static_cast<double>(batch.size());
      nn::backward(loss);
      if (linear && cfg.l2_lambda > 0.0) {
        auto& w = params[0]->tensor();
        auto g = w.mutable_grad();
        const auto v = w.values();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += cfg.l2_lambda * v[i];
      }
      nn::sgd_step(params, opt);
    }
    const double mean = total / static_cast<double>(order.size());
    result.epoch_losses.push_back(mean);
    if (cfg.on_epoch) cfg.on_epoch(epoch, mean);
  }
  result.model = std::move(model);
  result.fingerprint = {cfg.seed, corpus_hash(data), cfg.epochs};
  return result;
}

TrainedModel train_deep(const ModelSpec& spec, const CharVocabulary& vocab,
                        std::span<const LabeledExample> data, const TrainConfig& cfg) {
  Rng init(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::init)));
  return train(build_deep(spec, vocab, init), data, cfg);
}

TrainedModel train_logreg(const ModelSpec& spec, std::span<const LabeledExample> data,
                          const TrainConfig& cfg) {
  std::vector<NormalizedCommand> texts;
  texts.reserve(data.size());
  for (const auto& ex : data) texts.push_back(ex.command);
  if (texts.empty()) throw std::invalid_argument("degenerate dataset");
  return train(build_logreg(spec, texts), data, cfg);
}

TrainedModel train_model(const ModelSpec& spec, const CharVocabulary& vocab,
                         std::span<const LabeledExample> data, const TrainConfig& cfg) {
  return is_deep(spec.kind) ? train_deep(spec, vocab, data, cfg) : train_logreg(spec, data, cfg);
}

}  // namespace pshield
