#include "pshield/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "pshield/ops.hpp"
#include "pshield/optim.hpp"

namespace pshield {

using nn::Parameter;
using nn::Shape;
using nn::Tensor;
using json = nlohmann::ordered_json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::cnn4:
      return "cnn4";
    case ModelKind::cnn9:
      return "cnn9";
    case ModelKind::lstm:
      return "lstm";
    case ModelKind::ngram3_logreg:
      return "ngram3_logreg";
    case ModelKind::bow_logreg:
      return "bow_logreg";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::cnn4, ModelKind::cnn9, ModelKind::lstm, ModelKind::ngram3_logreg,
                      ModelKind::bow_logreg}) {
    if (name == to_string(k)) return k;
  }
  if (name == "ngram3") return ModelKind::ngram3_logreg;
  if (name == "bow") return ModelKind::bow_logreg;
  throw std::invalid_argument("unknown model kind: " + std::string(name));
}

ModelSpec ModelSpec::defaults(ModelKind kind) {
  ModelSpec s;
  s.kind = kind;
  switch (kind) {
    case ModelKind::cnn4:
      break;
    case ModelKind::cnn9:
      s.conv_filters = 256;
      s.conv_widths = {7, 7, 3, 3, 3, 3};
      s.pool_after = {0, 1, 5};
      s.fc_widths = {256, 256};
      break;
    case ModelKind::lstm:
      s.fc_widths = {256, 256};
      break;
    case ModelKind::ngram3_logreg:
    case ModelKind::bow_logreg:
      s.fc_widths.clear();
      s.dropout = 0.0;
      break;
  }
  return s;
}

std::string ModelSpec::to_json() const {
  json j;
  j["kind"] = std::string(to_string(kind));
  switch (kind) {
    case ModelKind::cnn4:
    case ModelKind::cnn9:
      j["max_len"] = max_len;
      j["case_bit"] = case_bit;
      j["conv_filters"] = conv_filters;
      j["conv_widths"] = conv_widths;
      j["pool_after"] = pool_after;
      j["pool_size"] = pool_size;
      j["fc_widths"] = fc_widths;
      j["dropout"] = dropout;
      break;
    case ModelKind::lstm:
      j["max_len"] = max_len;
      j["embedding_dim"] = embedding_dim;
      j["lstm_hidden"] = lstm_hidden;
      j["fc_widths"] = fc_widths;
      j["dropout"] = dropout;
      break;
    case ModelKind::ngram3_logreg:
      j["ngram"] = ngram;
      break;
    case ModelKind::bow_logreg:
      break;
  }
  return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
  const json j = json::parse(text);
  ModelSpec s = defaults(parse_model_kind(j.at("kind").get<std::string>()));
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  take("max_len", s.max_len);
  take("case_bit", s.case_bit);
  take("conv_filters", s.conv_filters);
  take("conv_widths", s.conv_widths);
  take("pool_after", s.pool_after);
  take("pool_size", s.pool_size);
  take("fc_widths", s.fc_widths);
  take("dropout", s.dropout);
  take("embedding_dim", s.embedding_dim);
  take("lstm_hidden", s.lstm_hidden);
  take("ngram", s.ngram);
  return s;
}

std::optional<std::size_t> cnn_output_length(const ModelSpec& spec, std::size_t input_len) {
  std::size_t len = input_len;
  for (std::size_t i = 0; i < spec.conv_widths.size(); ++i) {
    const std::size_t w = spec.conv_widths[i];
    if (w == 0 || len < w) return std::nullopt;
    len = len - w + 1;
    if (std::find(spec.pool_after.begin(), spec.pool_after.end(), i) != spec.pool_after.end()) {
      if (spec.pool_size == 0 || len < spec.pool_size) return std::nullopt;
      len = (len - spec.pool_size) / spec.pool_size + 1;
    }
  }
  if (len == 0) return std::nullopt;
  return len;
}

std::size_t cnn_min_length(const ModelSpec& spec) {
  for (std::size_t len = 1; len < (1u << 24); ++len) {
    if (cnn_output_length(spec, len)) return len;
  }
  throw std::invalid_argument("conv stack accepts no input length");
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor().size();
  return n;
}

const Parameter& Model::parameter(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name() == name) return p;
  }
  throw std::out_of_range("no parameter named " + std::string(name));
}

Parameter& Model::add_parameter(std::string name, Shape shape, std::vector<double> values) {
  for (const auto& p : params_) {
    if (p.name() == name) throw std::logic_error("duplicate parameter " + name);
  }
  params_.emplace_back(std::move(name), std::move(shape), std::move(values));
  return params_.back();
}

double Model::predict_score(const NormalizedCommand& cmd) const {
  Rng unused(0);
  return forward(std::span(&cmd, 1), false, unused).item();
}

std::vector<double> Model::predict_scores(std::span<const NormalizedCommand> cmds,
                                          std::size_t batch_size) const {
  std::vector<double> out;
  out.reserve(cmds.size());
  Rng unused(0);
  for (std::size_t i = 0; i < cmds.size(); i += batch_size) {
    const auto batch = cmds.subspan(i, std::min(batch_size, cmds.size() - i));
    const Tensor scores = forward(batch, false, unused);
    out.insert(out.end(), scores.values().begin(), scores.values().end());
  }
  return out;
}

namespace {

// Values for a new parameter: random when an init stream is given, zeros
// when the model is being restored from a file.
std::vector<double> init_values(std::size_t count, double limit, Rng* init) {
  if (init == nullptr || limit == 0.0) return std::vector<double>(count, 0.0);
  return nn::uniform_values(count, limit, *init);
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Fully connected head shared by the deep models: hidden layers with relu
// and dropout, then a single sigmoid unit.
class Head {
 public:
  void add(Tensor weight, Tensor bias) { layers_.push_back({std::move(weight), std::move(bias)}); }
  const Tensor& weight(std::size_t i) const { return layers_[i].weight; }
  const Tensor& bias(std::size_t i) const { return layers_[i].bias; }

  // features [B x in] -> scores [B]
  Tensor run(const Tensor& features, double dropout, bool training, Rng& rng,
             std::vector<LayerShape>* trace) const {
    return finish(nn::dense(features, layers_[0].weight, layers_[0].bias), 0, dropout, training,
                  rng, trace);
  }

  // z is the pre-activation output of layer `i`, [B x width].
  Tensor finish(Tensor z, std::size_t i, double dropout, bool training, Rng& rng,
                std::vector<LayerShape>* trace) const {
    for (;; ++i) {
      if (i + 1 == layers_.size()) {
        if (trace) trace->push_back({"output", {z.dim(1)}});
        return nn::reshape(nn::sigmoid(z), {z.dim(0)});
      }
      if (trace) trace->push_back({"fc" + std::to_string(i + 1), {z.dim(1)}});
      const Tensor h = nn::dropout(nn::relu(z), dropout, training, rng);
      z = nn::dense(h, layers_[i + 1].weight, layers_[i + 1].bias);
    }
  }

 private:
  struct Layer {
    Tensor weight;
    Tensor bias;
  };
  std::vector<Layer> layers_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

class DeepModel : public Model {
 public:
  DeepModel(const ModelSpec& spec, CharVocabulary vocab) : Model(spec), vocab_(std::move(vocab)) {}
  std::string input_json() const override { return vocab_.to_json(); }

 protected:
  // Adds fc1..fcN and the output layer after features of width `in`.
  void add_head(std::size_t in, Rng* init) {
    std::size_t width = in;
    const auto& fc = spec().fc_widths;
    for (std::size_t i = 0; i <= fc.size(); ++i) {
      const std::size_t out = i < fc.size() ? fc[i] : 1;
      const std::string name = i < fc.size() ? "fc" + std::to_string(i + 1) : "output";
      Tensor w = add_parameter(name + ".weight", {out, width},
                               init_values(out * width, glorot_limit(width, out), init))
                     .tensor();
      Tensor b = add_parameter(name + ".bias", {out}, std::vector<double>(out, 0.0)).tensor();
      head_.add(std::move(w), std::move(b));
      width = out;
    }
  }

  CharVocabulary vocab_;
  Head head_;
};

class Cnn4 final : public DeepModel {
 public:
  Cnn4(const ModelSpec& spec, const CharVocabulary& vocab, Rng* init) : DeepModel(spec, vocab) {
    require(spec.conv_widths.size() == 1 && spec.pool_after == std::vector<std::size_t>{0},
            "cnn4: expects one conv layer followed by pooling");
    require(spec.conv_filters > 0 && spec.pool_size > 0, "cnn4: filters and pool size must be positive");
    const auto pooled = cnn_output_length(spec, spec.max_len);
    require(pooled.has_value(), "cnn4: max_len " + std::to_string(spec.max_len) +
                                    " is below the minimum " + std::to_string(cnn_min_length(spec)));
    positions_ = *pooled;
    channels_ = vocab.onehot_rows();
    const std::size_t k = spec.conv_filters, w = spec.conv_widths[0];
    conv_w_ = add_parameter("conv.weight", {k, channels_, w},
                            init_values(k * channels_ * w, glorot_limit(channels_ * w, k * w), init))
                  .tensor();
    conv_b_ = add_parameter("conv.bias", {k}, std::vector<double>(k, 0.0)).tensor();
    add_head(positions_ * k, init);
  }

  Tensor forward(std::span<const NormalizedCommand> batch, bool training, Rng& rng,
                 std::vector<LayerShape>* trace) const override {
    const ModelSpec& s = spec();
    const std::size_t k = s.conv_filters, w = s.conv_widths[0], q = s.pool_size;
    std::vector<Tensor> active;
    active.reserve(batch.size());
    std::vector<double> x;
    for (const auto& cmd : batch) {
      const OneHotMatrix oh = encode_onehot(cmd, vocab_, s.max_len);
      const std::size_t a = std::min(positions_, ceil_div(oh.length(), q));
      if (a == 0) {
        active.push_back(Tensor::zeros({k, 0}));
        continue;
      }
      // Pool windows from `a` on see only zero padding; compute the rest.
      const std::size_t cols = std::min(s.max_len, a * q + w - 1);
      x.assign(channels_ * cols, 0.0);
      oh.fill_dense(x, cols, s.case_bit);
      const Tensor conv = nn::relu(nn::conv1d(Tensor::from({channels_, cols}, x), conv_w_, conv_b_));
      active.push_back(nn::maxpool1d(conv, q));
    }
    if (trace && !batch.empty()) {
      const OneHotMatrix oh = encode_onehot(batch[0], vocab_, s.max_len);
      x.assign(channels_ * s.max_len, 0.0);
      oh.fill_dense(x, s.max_len, s.case_bit);
      const Tensor conv = nn::conv1d(Tensor::from({channels_, s.max_len}, x), conv_w_, conv_b_);
      const Tensor pool = nn::maxpool1d(nn::relu(conv), q);
      trace->push_back({"input", {channels_, s.max_len}});
      trace->push_back({"conv", conv.shape()});
      trace->push_back({"pool", pool.shape()});
      trace->push_back({"flatten", {pool.size()}});
    }
    const Tensor tail = nn::relu(conv_b_);
    const Tensor z = nn::dense_padded_tail(active, tail, positions_, head_.weight(0), head_.bias(0));
    return head_.finish(z, 0, s.dropout, training, rng, trace);
  }

 private:
  std::size_t positions_ = 0;
  std::size_t channels_ = 0;
  Tensor conv_w_;
  Tensor conv_b_;
};

class Cnn9 final : public DeepModel {
 public:
  Cnn9(const ModelSpec& spec, const CharVocabulary& vocab, Rng* init) : DeepModel(spec, vocab) {
    require(!spec.conv_widths.empty() && spec.conv_filters > 0, "cnn9: needs conv layers");
    const auto out_len = cnn_output_length(spec, spec.max_len);
    require(out_len.has_value(), "cnn9: max_len " + std::to_string(spec.max_len) +
                                     " is below the minimum " + std::to_string(cnn_min_length(spec)));
    channels_ = vocab.onehot_rows();
    std::size_t in = channels_;
    const std::size_t k = spec.conv_filters;
    for (std::size_t i = 0; i < spec.conv_widths.size(); ++i) {
      const std::size_t w = spec.conv_widths[i];
      const std::string name = "conv" + std::to_string(i + 1);
      conv_w_.push_back(add_parameter(name + ".weight", {k, in, w},
                                      init_values(k * in * w, glorot_limit(in * w, k * w), init))
                            .tensor());
      conv_b_.push_back(add_parameter(name + ".bias", {k}, std::vector<double>(k, 0.0)).tensor());
      in = k;
    }
    add_head(k * *out_len, init);
  }

  Tensor forward(std::span<const NormalizedCommand> batch, bool training, Rng& rng,
                 std::vector<LayerShape>* trace) const override {
    const ModelSpec& s = spec();
    const std::size_t len = s.max_len;
    std::vector<double> x(batch.size() * channels_ * len, 0.0);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      encode_onehot(batch[b], vocab_, len)
          .fill_dense(std::span(x).subspan(b * channels_ * len, channels_ * len), len, s.case_bit);
    }
    Tensor h = Tensor::from({batch.size(), channels_, len}, std::move(x));
    if (trace) trace->push_back({"input", {channels_, len}});
    for (std::size_t i = 0; i < conv_w_.size(); ++i) {
      h = nn::relu(nn::conv1d(h, conv_w_[i], conv_b_[i]));
      if (trace) trace->push_back({"conv" + std::to_string(i + 1), {h.dim(1), h.dim(2)}});
      if (std::find(s.pool_after.begin(), s.pool_after.end(), i) != s.pool_after.end()) {
        h = nn::maxpool1d(h, s.pool_size);
        if (trace) trace->push_back({"pool" + std::to_string(i + 1), {h.dim(1), h.dim(2)}});
      }
    }
    const std::size_t flat = h.dim(1) * h.dim(2);
    if (trace) trace->push_back({"flatten", {flat}});
    return head_.run(nn::reshape(h, {batch.size(), flat}), s.dropout, training, rng, trace);
  }

 private:
  std::size_t channels_ = 0;
  std::vector<Tensor> conv_w_;
  std::vector<Tensor> conv_b_;
};

class Lstm final : public DeepModel {
 public:
  Lstm(const ModelSpec& spec, const CharVocabulary& vocab, Rng* init) : DeepModel(spec, vocab) {
    require(spec.embedding_dim > 0 && spec.lstm_hidden > 0, "lstm: sizes must be positive");
    const std::size_t v = vocab.sequence_alphabet(), d = spec.embedding_dim, h = spec.lstm_hidden;
    table_ = add_parameter("embedding", {v, d}, init_values(v * d, glorot_limit(v, d), init)).tensor();
    const double rec = 1.0 / std::sqrt(static_cast<double>(h));
    for (const char* dir : {"lstm.forward", "lstm.backward"}) {
      nn::LstmParams p;
      p.input_weights =
          add_parameter(std::string(dir) + ".input_weights", {4 * h, d}, init_values(4 * h * d, rec, init))
              .tensor();
      p.recurrent_weights = add_parameter(std::string(dir) + ".recurrent_weights", {4 * h, h},
                                          init_values(4 * h * h, rec, init))
                                .tensor();
      p.bias = add_parameter(std::string(dir) + ".bias", {4 * h}, std::vector<double>(4 * h, 0.0)).tensor();
      dirs_.push_back(p);
    }
    add_head(2 * h, init);
  }

  Tensor forward(std::span<const NormalizedCommand> batch, bool training, Rng& rng,
                 std::vector<LayerShape>* trace) const override {
    std::vector<Tensor> seqs;
    seqs.reserve(batch.size());
    for (const auto& cmd : batch) {
      const CodeSequence codes = encode_codes(cmd, vocab_, spec().max_len);
      seqs.push_back(nn::embedding(codes.codes, table_));
    }
    if (trace && !seqs.empty()) trace->push_back({"embedding", seqs[0].shape()});
    const Tensor h = nn::bilstm_batch(seqs, dirs_[0], dirs_[1]);
    if (trace) trace->push_back({"bilstm", {h.dim(1)}});
    return head_.run(h, spec().dropout, training, rng, trace);
  }

 private:
  Tensor table_;
  std::vector<nn::LstmParams> dirs_;
};

// z[s] = b + sum over entries of w[index] * value
Tensor sparse_linear(std::vector<SparseFeatureVector> features, const Tensor& w, const Tensor& b) {
  std::vector<double> z(features.size(), b.values()[0]);
  const auto wv = w.values();
  for (std::size_t s = 0; s < features.size(); ++s) {
    for (auto [i, x] : features[s].entries) z[s] += wv[i] * x;
  }
  auto wn = w.node();
  auto bn = b.node();
  const std::size_t count = features.size();
  return Tensor::make_result("sparse_linear", {count}, std::move(z), {w, b},
                             [wn, bn, features = std::move(features)](nn::detail::Node& self) {
                               if (wn->requires_grad) {
                                 auto gw = wn->ensure_grad();
                                 for (std::size_t s = 0; s < features.size(); ++s) {
                                   for (auto [i, x] : features[s].entries) gw[i] += self.grad[s] * x;
                                 }
                               }
                               if (bn->requires_grad) {
                                 double& gb = bn->ensure_grad()[0];
                                 for (double g : self.grad) gb += g;
                               }
                             });
}

class LogReg final : public Model {
 public:
  LogReg(const ModelSpec& spec, std::optional<NgramVocabulary> grams,
         std::optional<TokenVocabulary> tokens)
      : Model(spec), grams_(std::move(grams)), tokens_(std::move(tokens)) {
    const std::size_t dim = grams_ ? grams_->size() : tokens_->size();
    weight_ = add_parameter("weight", {dim}, std::vector<double>(dim, 0.0)).tensor();
    bias_ = add_parameter("bias", {1}, {0.0}).tensor();
  }

  SparseFeatureVector features(const NormalizedCommand& cmd) const {
    return grams_ ? grams_->transform_tfidf(cmd) : tokens_->transform_tf(cmd);
  }

  Tensor forward(std::span<const NormalizedCommand> batch, bool, Rng&,
                 std::vector<LayerShape>* trace) const override {
    std::vector<SparseFeatureVector> feats;
    feats.reserve(batch.size());
    for (const auto& cmd : batch) feats.push_back(features(cmd));
    if (trace) trace->push_back({"features", {weight_.size()}});
    return nn::sigmoid(sparse_linear(std::move(feats), weight_, bias_));
  }

  std::string input_json() const override { return grams_ ? grams_->to_json() : tokens_->to_json(); }

 private:
  std::optional<NgramVocabulary> grams_;
  std::optional<TokenVocabulary> tokens_;
  Tensor weight_;
  Tensor bias_;
};

void require_kind(const ModelSpec& spec, ModelKind kind) {
  require(spec.kind == kind, "spec kind " + std::string(to_string(spec.kind)) + " passed to the " +
                                 std::string(to_string(kind)) + " builder");
}

std::unique_ptr<Model> make_deep(const ModelSpec& spec, const CharVocabulary& vocab, Rng* init) {
  switch (spec.kind) {
    case ModelKind::cnn4:
      return std::make_unique<Cnn4>(spec, vocab, init);
    case ModelKind::cnn9:
      return std::make_unique<Cnn9>(spec, vocab, init);
    case ModelKind::lstm:
      return std::make_unique<Lstm>(spec, vocab, init);
    default:
      throw std::invalid_argument(std::string(to_string(spec.kind)) + " is not a deep model");
  }
}

}  // namespace

std::unique_ptr<Model> build_cnn4(const ModelSpec& spec, const CharVocabulary& vocab, Rng& init) {
  require_kind(spec, ModelKind::cnn4);
  return make_deep(spec, vocab, &init);
}

std::unique_ptr<Model> build_cnn9(const ModelSpec& spec, const CharVocabulary& vocab, Rng& init) {
  require_kind(spec, ModelKind::cnn9);
  return make_deep(spec, vocab, &init);
}

std::unique_ptr<Model> build_lstm(const ModelSpec& spec, const CharVocabulary& vocab, Rng& init) {
  require_kind(spec, ModelKind::lstm);
  return make_deep(spec, vocab, &init);
}

std::unique_ptr<Model> build_deep(const ModelSpec& spec, const CharVocabulary& vocab, Rng& init) {
  return make_deep(spec, vocab, &init);
}

std::unique_ptr<Model> build_logreg(const ModelSpec& spec, std::span<const NormalizedCommand> corpus) {
  if (spec.kind == ModelKind::ngram3_logreg) {
    return std::make_unique<LogReg>(spec, NgramVocabulary::fit(corpus, spec.ngram), std::nullopt);
  }
  require_kind(spec, ModelKind::bow_logreg);
  return std::make_unique<LogReg>(spec, std::nullopt, TokenVocabulary::fit(corpus));
}

std::unique_ptr<Model> restore_model(const ModelSpec& spec, const std::string& input_json,
                                     std::vector<std::vector<double>> values) {
  std::unique_ptr<Model> model;
  if (is_deep(spec.kind)) {
    model = make_deep(spec, CharVocabulary::from_json(input_json), nullptr);
  } else if (spec.kind == ModelKind::ngram3_logreg) {
    model = std::make_unique<LogReg>(spec, NgramVocabulary::from_json(input_json), std::nullopt);
  } else {
    model = std::make_unique<LogReg>(spec, std::nullopt, TokenVocabulary::from_json(input_json));
  }
  auto& params = model->parameter_list();
  if (values.size() != params.size()) {
    throw std::invalid_argument("model file has " + std::to_string(values.size()) +
                                " parameters, architecture needs " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor().mutable_values();
    if (values[i].size() != dst.size()) {
      throw std::invalid_argument("parameter " + params[i].name() + " has " +
                                  std::to_string(values[i].size()) + " values, expected " +
                                  std::to_string(dst.size()));
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
  return model;
}

}  // namespace pshield
