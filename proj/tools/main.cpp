// pshield: batch front end for corpus generation, training, evaluation and
// classification of PowerShell command lines.
#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config_args.hpp"
#include "json.hpp"
#include "pshield/corpus.hpp"
#include "pshield/ensemble.hpp"
#include "pshield/evaluator.hpp"
#include "pshield/model_io.hpp"
#include "pshield/pipeline.hpp"
#include "pshield/text.hpp"

namespace fs = std::filesystem;
using namespace pshield;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << data;
  if (!out.flush()) throw std::runtime_error("write failed: " + path.string());
}

// "-" reads stdin.
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (path != "-") {
    file.open(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open " + path);
    in = &file;
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(*in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<LabeledCommand> load_corpus(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("input file not found: " + path);
  return load_jsonl(path);
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

// ---------------------------------------------------------------- gen-corpus

struct GenOptions {
  GenerateParams params;
  std::vector<double> mix;
  std::string out;
  std::string manifest;
  std::string from_manifest;
};

void run_gen_corpus(GenOptions o) {
  if (!o.from_manifest.empty()) {
    o.params = CorpusManifest::from_json(read_file(o.from_manifest)).params;
  } else if (!o.mix.empty()) {
    if (o.mix.size() != kObfuscationMethods) {
      throw std::runtime_error("--mix needs " + std::to_string(kObfuscationMethods) + " weights");
    }
    std::copy(o.mix.begin(), o.mix.end(), o.params.obfuscation_mix.begin());
  }
  const auto corpus = generate_corpus(o.params);
  save_jsonl(corpus.commands, o.out);
  const std::string manifest = corpus.manifest.to_json();
  write_file(o.manifest.empty() ? o.out + ".manifest.json" : o.manifest, manifest + "\n");
  std::cout << manifest << '\n';
}

// ---------------------------------------------------------------- preprocess

struct PreprocessOptions {
  std::string in, out;
};

void run_preprocess(const PreprocessOptions& o) {
  PreprocessStats stats;
  const auto corpus = load_corpus(o.in);
  const auto out = preprocess_corpus(corpus, &stats);
  save_jsonl(out, o.out);
  std::cerr << "read " << stats.input << ", wrote " << stats.output << ", decoded "
            << stats.decoded << ", decode warnings " << stats.decode_warnings
            << ", label conflicts " << stats.label_conflicts << '\n';
}

// ---------------------------------------------------------------- vocab

struct VocabOptions {
  std::string in, out, kind = "char";
  double threshold = kDefaultCharThreshold;
  std::size_t ngram = 3;
};

void run_vocab(const VocabOptions& o) {
  std::vector<NormalizedCommand> cmds;
  for (const auto& ex : to_examples(load_corpus(o.in))) cmds.push_back(ex.command);
  std::string out;
  if (o.kind == "char") {
    const auto v = CharVocabulary::build(cmds, o.threshold);
    std::cerr << "char vocabulary: " << v.size() << " codes\n";
    out = v.to_json();
  } else if (o.kind == "ngram3" || o.kind == "ngram") {
    const auto v = NgramVocabulary::fit(cmds, o.ngram);
    std::cerr << o.ngram << "-gram vocabulary: " << v.size() << " grams\n";
    out = v.to_json();
  } else if (o.kind == "bow") {
    const auto v = TokenVocabulary::fit(cmds);
    std::cerr << "token vocabulary: " << v.size() << " tokens\n";
    out = v.to_json();
  } else {
    throw std::runtime_error("unknown vocabulary kind: " + o.kind);
  }
  write_file(o.out, out + "\n");
}

// ---------------------------------------------------------------- ingest

struct IngestOptions {
  std::string in = "-", label, out;
  bool append = false;
};

void run_ingest(const IngestOptions& o) {
  bool malicious = false;
  if (o.label == "malicious") {
    malicious = true;
  } else if (o.label != "clean") {
    throw std::runtime_error("--label must be malicious or clean");
  }
  std::ifstream file;
  std::istream* in = &std::cin;
  if (o.in != "-") {
    file.open(o.in, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open " + o.in);
    in = &file;
  }
  auto cmds = ingest_lines(*in, malicious);
  std::ofstream out(o.out, std::ios::binary | (o.append ? std::ios::app : std::ios::trunc));
  if (!out) throw std::runtime_error("cannot write " + o.out);
  out << to_jsonl(cmds);
  std::cerr << "ingested " << cmds.size() << " " << o.label << " commands\n";
}

// ---------------------------------------------------------------- training flags

struct TrainFlags {
  TrainConfig cfg;
  std::size_t max_len = kDefaultMaxLen;
  bool no_case_bit = false;
  double dropout = -1.0;  // < 0 keeps the architecture default
  std::string vocab;
  std::string spec_file;

  void add_to(CLI::App* app) {
    app->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str();
    app->add_option("--batch", cfg.batch_size, "minibatch size")->capture_default_str();
    app->add_option("--seed", cfg.seed, "training seed")->capture_default_str();
    app->add_option("--dup", cfg.duplication_factor, "malicious duplication factor")
        ->capture_default_str();
    app->add_option("--lr", cfg.learning_rate, "learning rate")->capture_default_str();
    app->add_option("--momentum", cfg.momentum, "SGD momentum")->capture_default_str();
    app->add_option("--l2", cfg.l2_lambda, "L2 weight for linear models")->capture_default_str();
    app->add_option("--max-len", max_len, "deep model input length")->capture_default_str();
    app->add_flag("--no-case-bit", no_case_bit, "zero the case-bit row (4-CNN*)");
    app->add_option("--dropout", dropout, "dropout rate override");
    app->add_option("--vocab", vocab, "character vocabulary JSON (default: pinned)");
    app->add_option("--spec", spec_file, "model spec JSON overriding the architecture");
  }

  ModelSpec spec_for(const std::string& kind) const {
    ModelSpec spec = spec_file.empty() ? ModelSpec::defaults(parse_model_kind(kind))
                                       : ModelSpec::from_json(read_file(spec_file));
    if (spec_file.empty()) {
      spec.max_len = max_len;
      if (dropout >= 0.0) spec.dropout = dropout;
    }
    if (no_case_bit) spec.case_bit = false;
    return spec;
  }

  CharVocabulary char_vocab() const {
    return vocab.empty() ? CharVocabulary::pinned_default()
                         : CharVocabulary::from_json(read_file(vocab));
  }
};

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string in, out, model = "cnn4";
  TrainFlags flags;
  std::vector<double> l2_grid;
  std::size_t grid_folds = 2;
};

void run_train(TrainOptions o) {
  const auto data = to_examples(load_corpus(o.in));
  const ModelSpec spec = o.flags.spec_for(o.model);
  TrainConfig cfg = o.flags.cfg;

  if (!o.l2_grid.empty()) {
    if (is_deep(spec.kind)) throw std::runtime_error("--l2-grid applies to linear models only");
    const auto sel = select_l2(data, spec, cfg, o.l2_grid, o.grid_folds, cfg.seed);
    for (const auto& [lambda, auc] : sel.auc_by_lambda) {
      log_line("l2 " + fmt("%g", lambda) + " auc " + fmt("%.6f", auc));
    }
    cfg.l2_lambda = sel.best;
    log_line("selected l2 " + fmt("%g", sel.best));
  }

  const auto start = std::chrono::steady_clock::now();
  cfg.on_epoch = [&](std::size_t epoch, double loss) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log_line("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs) + " loss " +
             fmt("%.6f", loss) + " (" + fmt("%.1f", secs) + "s)");
  };
  const auto trained = train_model(spec, o.flags.char_vocab(), data, cfg);
  save_model_file(trained, o.out);
  log_line("wrote " + o.out + " (" + model_label(spec) + ", " +
           std::to_string(trained.model->parameter_count()) + " parameters)");
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string in;
  std::vector<std::string> models;
  std::size_t kfold = 0;
  std::uint64_t fold_seed = 1;
  std::vector<std::string> train_models{"cnn4", "ngram3"};
  TrainFlags flags;
  bool no_ensemble = false;
  double gate = EnsembleConfig{}.gate;
  std::vector<double> budgets{std::begin(kDefaultBudgets), std::end(kDefaultBudgets)};
  std::string json_out;
  std::string roc_dir;
};

std::string file_safe(const std::string& name) {
  std::string out;
  for (char c : name) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c
           : c == '*'                                                            ? 'x'
                                                                                 : '_';
  }
  return out;
}

void write_roc(const std::string& dir, const std::string& name,
               std::span<const ScoredItem> items) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / (file_safe(name) + ".csv");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_roc_csv(roc_auc(items), out);
}

void run_evaluate(const EvaluateOptions& o) {
  const auto data = to_examples(load_corpus(o.in));
  std::vector<EvalReport> reports;
  EnsembleConfig ens;
  ens.gate = o.gate;

  if (o.kfold > 0) {
    if (!o.models.empty()) throw std::runtime_error("--kfold trains its own models; drop --model");
    CrossValidationConfig cv;
    cv.folds = o.kfold;
    cv.seed = o.fold_seed;
    cv.train = o.flags.cfg;
    for (const auto& kind : o.train_models) cv.models.push_back(o.flags.spec_for(kind));
    cv.vocab = o.flags.char_vocab();
    cv.ensemble = !o.no_ensemble;
    cv.ensemble_config = ens;
    cv.budgets = o.budgets;
    cv.log = log_line;
    auto result = cross_validate(data, cv);
    reports = std::move(result.reports);
    if (!o.roc_dir.empty()) {
      for (const auto& [name, items] : result.pooled) write_roc(o.roc_dir, name, items);
    }
  } else {
    if (o.models.empty()) throw std::runtime_error("evaluate needs --model files or --kfold");
    std::vector<NormalizedCommand> cmds;
    for (const auto& ex : data) cmds.push_back(ex.command);
    std::vector<std::string> names;
    std::vector<std::vector<double>> scores;
    std::ptrdiff_t deep = -1, linear = -1;
    for (const auto& path : o.models) {
      const auto trained = load_model_file(path);
      const auto& spec = trained.model->spec();
      auto& slot = is_deep(spec.kind) ? deep : linear;
      if (slot < 0) slot = static_cast<std::ptrdiff_t>(names.size());
      names.push_back(model_label(spec));
      scores.push_back(trained.model->predict_scores(cmds));
      log_line("scored " + std::to_string(cmds.size()) + " commands with " + path);
    }
    if (!o.no_ensemble && deep >= 0 && linear >= 0) {
      const auto& d = scores[static_cast<std::size_t>(deep)];
      const auto& t = scores[static_cast<std::size_t>(linear)];
      std::vector<double> combined(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) combined[i] = combine(d[i], t[i], ens);
      names.push_back("ensemble(" + names[static_cast<std::size_t>(deep)] + "," +
                      names[static_cast<std::size_t>(linear)] + ")");
      scores.push_back(std::move(combined));
    }
    for (std::size_t m = 0; m < names.size(); ++m) {
      std::vector<ScoredItem> items(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) items[i] = {scores[m][i], data[i].malicious};
      reports.push_back(evaluate_scores(names[m], items, o.budgets));
      if (!o.roc_dir.empty()) write_roc(o.roc_dir, names[m], items);
    }
  }

  if (!o.json_out.empty()) write_file(o.json_out, reports_json(reports) + "\n");
  std::cout << reports_text(reports);
}

// ---------------------------------------------------------------- classify

struct ClassifyOptions {
  std::string model;
  std::vector<std::string> ensemble;
  std::string in = "-";
  double threshold = NAN;
  std::string threshold_from;
  double fpr = 1e-3;
  std::string report_model;
  double gate = EnsembleConfig{}.gate;
};

double threshold_from_report(const std::string& path, const std::string& model, double budget) {
  const auto doc = nlohmann::json::parse(read_file(path));
  for (const auto& m : doc.at("models")) {
    if (m.at("model").get<std::string>() != model) continue;
    for (const auto& b : m.at("tpr_at_fpr")) {
      const double fb = b.at("fpr_budget").get<double>();
      if (std::abs(fb - budget) > 1e-12 * std::max(1.0, std::abs(budget))) continue;
      if (b.at("threshold").is_null()) {
        throw std::runtime_error("report " + path + " has no threshold for " + model +
                                 " (cross-validation averages carry none)");
      }
      return b.at("threshold").get<double>();
    }
    throw std::runtime_error("report " + path + " has no FPR budget " + fmt("%g", budget) +
                             " for " + model);
  }
  throw std::runtime_error("report " + path + " has no model named " + model);
}

void run_classify(const ClassifyOptions& o) {
  if (o.model.empty() == o.ensemble.empty()) {
    throw std::runtime_error("classify needs exactly one of --model or --ensemble");
  }
  if (!o.ensemble.empty() && o.ensemble.size() != 2) {
    throw std::runtime_error("--ensemble takes a deep and a traditional model file");
  }
  const auto lines = read_lines(o.in);
  std::vector<NormalizedCommand> cmds;
  cmds.reserve(lines.size());
  for (const auto& l : lines) cmds.push_back(preprocess(RawCommand{l, {}}));

  std::vector<double> scores;
  std::string name;
  if (!o.model.empty()) {
    const auto m = load_model_file(o.model);
    name = model_label(m.model->spec());
    scores = m.model->predict_scores(cmds);
  } else {
    const auto deep = load_model_file(o.ensemble[0]);
    const auto trad = load_model_file(o.ensemble[1]);
    if (!is_deep(deep.model->spec().kind) || is_deep(trad.model->spec().kind)) {
      throw std::runtime_error("--ensemble expects the deep model first, then the linear one");
    }
    name = "ensemble(" + model_label(deep.model->spec()) + "," +
           model_label(trad.model->spec()) + ")";
    const auto d = deep.model->predict_scores(cmds);
    const auto t = trad.model->predict_scores(cmds);
    EnsembleConfig ens;
    ens.gate = o.gate;
    scores.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) scores[i] = combine(d[i], t[i], ens);
  }

  double threshold = o.threshold;
  if (!o.threshold_from.empty()) {
    threshold = threshold_from_report(o.threshold_from,
                                      o.report_model.empty() ? name : o.report_model, o.fpr);
    log_line("threshold " + fmt("%.17g", threshold) + " from " + o.threshold_from);
  }
  const bool verdicts = !std::isnan(threshold);
  std::string out;
  for (double s : scores) {
    out += fmt("%.17g", s);
    if (verdicts) out += s >= threshold ? "\tmalicious" : "\tclean";
    out += '\n';
  }
  std::cout << out;
}

// ---------------------------------------------------------------- stats

struct StatsOptions {
  std::string in;
  std::vector<std::size_t> edges{128, 256, 512, 1024, 2000, 4096};
  std::string json_out, csv_out;
  bool normalized = false;
};

std::string histogram_csv(const LengthHistogram& h) {
  std::string out = "label,total";
  for (auto e : h.edges) out += ",le_" + std::to_string(e);
  out += ",gt_" + std::to_string(h.edges.empty() ? 0 : h.edges.back());
  out += ",fraction_le_1024,fraction_le_2000";
  for (double q : kLengthQuantiles) out += ",p" + fmt("%g", q * 100);
  out += '\n';
  const std::pair<const char*, const LengthRow*> rows[] = {
      {"malicious", &h.malicious}, {"clean", &h.clean}, {"all", &h.all}};
  for (const auto& [label, row] : rows) {
    out += label;
    out += ',' + std::to_string(row->total);
    for (auto c : row->counts) out += ',' + std::to_string(c);
    out += ',' + fmt("%.17g", row->fraction_le_1024) + ',' + fmt("%.17g", row->fraction_le_2000);
    for (auto q : row->quantiles) out += ',' + std::to_string(q);
    out += '\n';
  }
  return out;
}

void run_stats(const StatsOptions& o) {
  auto corpus = load_corpus(o.in);
  if (o.normalized) corpus = preprocess_corpus(corpus);
  std::vector<LengthSample> samples;
  samples.reserve(corpus.size());
  for (const auto& c : corpus) {
    samples.push_back({text::utf8_decode_lenient(c.command).size(), c.malicious});
  }
  const auto h = length_histogram(samples, o.edges);
  if (!o.json_out.empty()) write_file(o.json_out, length_histogram_json(h) + "\n");
  if (!o.csv_out.empty()) write_file(o.csv_out, histogram_csv(h));
  std::cout << length_histogram_text(h);
}

void add_config_option(CLI::App* app) {
  // Consumed before parsing; declared so CLI11 accepts it and lists it in --help.
  app->add_option("--config", "JSON file with defaults for this subcommand's flags");
}

int run(int argc, char** argv) {
  CLI::App app{"pshield: malicious PowerShell command-line detection"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen-corpus", "generate a seeded synthetic labeled corpus");
  g->add_option("--seed", gen.params.seed, "generator seed")->capture_default_str();
  g->add_option("--clean", gen.params.n_clean, "number of clean commands")->capture_default_str();
  g->add_option("--malicious", gen.params.n_malicious, "number of malicious commands")
      ->capture_default_str();
  g->add_option("--mix", gen.mix, "11 obfuscation method weights")->delimiter(',');
  g->add_option("--min-obf", gen.params.min_obfuscations, "fewest obfuscations per command")
      ->capture_default_str();
  g->add_option("--max-obf", gen.params.max_obfuscations, "most obfuscations per command")
      ->capture_default_str();
  g->add_option("--bank", gen.params.template_bank, "template bank version")
      ->capture_default_str();
  g->add_option("--from-manifest", gen.from_manifest, "regenerate from a manifest's parameters")
      ->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "output JSONL")->required();
  g->add_option("--manifest", gen.manifest, "manifest path (default: <out>.manifest.json)");

  PreprocessOptions pre;
  auto* p = app.add_subcommand("preprocess", "normalize and deduplicate a corpus");
  p->add_option("--in", pre.in, "input JSONL")->required();
  p->add_option("--out", pre.out, "output JSONL")->required();

  VocabOptions voc;
  auto* v = app.add_subcommand("vocab", "build a vocabulary from a corpus");
  v->add_option("--in", voc.in, "input JSONL")->required();
  v->add_option("--out", voc.out, "output JSON")->required();
  v->add_option("--kind", voc.kind, "char, ngram3 or bow")->capture_default_str();
  v->add_option("--threshold", voc.threshold, "char document-frequency threshold")
      ->capture_default_str();
  v->add_option("--n", voc.ngram, "n-gram length")->capture_default_str();

  IngestOptions ing;
  auto* i = app.add_subcommand("ingest", "convert a one-command-per-line file to JSONL");
  i->add_option("--in", ing.in, "input text file, - for stdin")->capture_default_str();
  i->add_option("--label", ing.label, "malicious or clean")->required();
  i->add_option("--out", ing.out, "output JSONL")->required();
  i->add_flag("--append", ing.append, "append instead of overwriting");

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "train one model and write a model file");
  t->add_option("--in", tr.in, "training JSONL")->required();
  t->add_option("--out", tr.out, "model file")->required();
  t->add_option("--model", tr.model, "cnn4, cnn9, lstm, ngram3 or bow")->capture_default_str();
  tr.flags.add_to(t);
  t->add_option("--l2-grid", tr.l2_grid, "pick --l2 by k-fold AUC over these values")
      ->delimiter(',');
  t->add_option("--grid-folds", tr.grid_folds, "folds for --l2-grid")->capture_default_str();

  EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "score model files or run k-fold cross-validation");
  e->add_option("--in", ev.in, "labeled JSONL")->required();
  e->add_option("--model", ev.models, "model file (repeatable)");
  e->add_option("--kfold", ev.kfold, "run k-fold cross-validation instead");
  e->add_option("--fold-seed", ev.fold_seed, "fold assignment seed")->capture_default_str();
  e->add_option("--train-model", ev.train_models, "model kinds trained per fold")
      ->delimiter(',')
      ->capture_default_str();
  ev.flags.add_to(e);
  e->add_flag("--no-ensemble", ev.no_ensemble, "skip the deep/traditional ensemble");
  e->add_option("--gate", ev.gate, "ensemble gate")->capture_default_str();
  e->add_option("--fpr", ev.budgets, "FPR budgets")->delimiter(',')->capture_default_str();
  e->add_option("--json", ev.json_out, "write the JSON report here");
  e->add_option("--roc-csv", ev.roc_dir, "write one ROC CSV per model into this directory");

  ClassifyOptions cl;
  auto* c = app.add_subcommand("classify", "score command lines, one per input line");
  c->add_option("--model", cl.model, "model file");
  c->add_option("--ensemble", cl.ensemble, "deep and traditional model files")->expected(2);
  c->add_option("--in", cl.in, "input text file, - for stdin")->capture_default_str();
  c->add_option("--threshold", cl.threshold, "print verdicts at this score threshold");
  c->add_option("--threshold-from", cl.threshold_from, "take the threshold from a report JSON")
      ->check(CLI::ExistingFile);
  c->add_option("--fpr", cl.fpr, "FPR budget to look up with --threshold-from")
      ->capture_default_str();
  c->add_option("--report-model", cl.report_model, "report entry name (default: the model's)");
  c->add_option("--gate", cl.gate, "ensemble gate")->capture_default_str();
  c->get_option("--threshold")->excludes(c->get_option("--threshold-from"));

  StatsOptions st;
  auto* s = app.add_subcommand("stats", "command-length histogram per label");
  s->add_option("--in", st.in, "labeled JSONL")->required();
  s->add_option("--edges", st.edges, "bucket upper edges")->delimiter(',')->capture_default_str();
  s->add_option("--json", st.json_out, "write JSON here");
  s->add_option("--csv", st.csv_out, "write CSV here");
  s->add_flag("--normalized", st.normalized, "measure preprocessed commands");

  for (auto* sub : {g, p, v, i, t, e, c, s}) add_config_option(sub);

  std::vector<std::string> args(argv + 1, argv + argc);
  std::string sub_name;
  for (const auto& a : args) {
    if (!app.get_subcommands([&](CLI::App* sub) { return sub->get_name() == a; }).empty()) {
      sub_name = a;
      break;
    }
  }
  if (const auto cfg_path = cli::find_config_path(args); !cfg_path.empty() && !sub_name.empty()) {
    args = cli::merge_config_args(args, sub_name, read_file(cfg_path));
  }
  std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
  try {
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    return app.exit(err, std::cout, std::cerr);
  }

  if (g->parsed()) run_gen_corpus(gen);
  if (p->parsed()) run_preprocess(pre);
  if (v->parsed()) run_vocab(voc);
  if (i->parsed()) run_ingest(ing);
  if (t->parsed()) run_train(tr);
  if (e->parsed()) run_evaluate(ev);
  if (c->parsed()) run_classify(cl);
  if (s->parsed()) run_stats(st);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "pshield: " << e.what() << '\n';
    return 1;
  }
}
