#include "pshield/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pshield/text.hpp"
#include "template_bank_data.hpp"

namespace pshield {
namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kManifestFormat = "pshield-corpus/1";

enum : std::uint64_t { kCleanStream = 11, kMaliciousStream = 12, kShuffleStream = 13 };

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> content_lines(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (!line.empty() && line.front() != '#') out.push_back(line);
  }
  return out;
}

bool placeholder_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); }

// Calls fn(begin, end, name) for every {name} placeholder.
template <typename Fn>
void for_each_placeholder(std::string_view tpl, Fn fn) {
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < tpl.size() && placeholder_char(tpl[j])) ++j;
    if (j > i + 1 && j < tpl.size() && tpl[j] == '}') {
      fn(i, j + 1, tpl.substr(i + 1, j - i - 1));
      i = j;
    }
  }
}

bool is_builtin(std::string_view name) {
  return std::find(kBuiltinPlaceholders.begin(), kBuiltinPlaceholders.end(), name) !=
         kBuiltinPlaceholders.end();
}

class Filler {
 public:
  Filler(const TemplateBank& bank, Rng& rng) : bank_(bank), rng_(rng) {}

  std::string fill(std::string_view tpl) {
    std::string out;
    std::size_t prev = 0;
    for_each_placeholder(tpl, [&](std::size_t b, std::size_t e, std::string_view name) {
      out += tpl.substr(prev, b - prev);
      out += value(name);
      prev = e;
    });
    out += tpl.substr(prev);
    return out;
  }

 private:
  std::string pick(const char* list) { return rng_.pick(bank_.fillers.at(list)); }

  std::string letters(std::size_t lo, std::size_t hi) {
    std::string s;
    const std::size_t n = lo + rng_.below(hi - lo + 1);
    for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('a' + rng_.below(26)));
    return s;
  }

  // Random letter runs separated by single digits: "d8c3a1ci7x".
  std::string dga() {
    std::string s;
    const std::size_t n = 8 + rng_.below(7);
    while (s.size() < n) {
      s += letters(1, 2);
      if (s.size() < n) s.push_back(static_cast<char>('0' + rng_.below(10)));
    }
    return s + "." + pick("tld");
  }

  std::string host() {
    switch (rng_.below(4)) {
      case 0:
        return ip();
      case 1:
        return pick("word") + letters(2, 5) + "." + pick("tld");
      default:
        return dga();
    }
  }

  std::string ip() {
    return std::to_string(1 + rng_.below(223)) + "." + std::to_string(rng_.below(256)) + "." +
           std::to_string(rng_.below(256)) + "." + std::to_string(1 + rng_.below(254));
  }

  std::string url() {
    std::string u = rng_.bernoulli(0.6) ? "http://" : "https://";
    u += host();
    if (rng_.bernoulli(0.3)) u += ":" + std::to_string(8000 + rng_.below(1000));
    u += "/" + pick("path") + "/" + letters(3, 9) + "." + pick("payloadext");
    return u;
  }

  std::string value(std::string_view name) {
    if (name == "num") return std::to_string(1 + rng_.below(rng_.bernoulli(0.7) ? 30 : 5000));
    if (name == "port") {
      static const std::vector<std::string> common = {"80", "443", "4444", "8080", "8443", "53", "5985", "1337"};
      return rng_.bernoulli(0.6) ? rng_.pick(common) : std::to_string(1024 + rng_.below(64000));
    }
    if (name == "ip") return ip();
    if (name == "var") return letters(4, 8);
    if (name == "dga") return dga();
    if (name == "url") return url();
    if (name == "guid") {
      static constexpr char hex[] = "0123456789abcdef";
      std::string g;
      for (int i = 0; i < 32; ++i) {
        if (i == 8 || i == 12 || i == 16 || i == 20) g.push_back('-');
        g.push_back(hex[rng_.below(16)]);
      }
      return g;
    }
    if (name == "b64") {
      const std::string cfg = "{\"name\":\"" + pick("word") + "\",\"level\":" +
                              std::to_string(rng_.below(10)) + ",\"owner\":\"" + pick("user") + "\"}";
      return text::base64_encode(cfg);
    }
    if (name == "enc") {
      // A benign command from the same bank, encoded as PowerShell expects.
      std::string inner;
      do {
        inner = rng_.pick(bank_.benign);
      } while (inner.find("{enc}") != std::string::npos);
      return text::base64_encode(text::utf8_to_utf16le(fill(inner)));
    }
    if (name == "blob") {
      std::vector<std::uint8_t> bytes(48 + rng_.below(193));
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rng_.below(256));
      return text::base64_encode(bytes);
    }
    return pick(std::string(name).c_str());
  }

  const TemplateBank& bank_;
  Rng& rng_;
};

// Draws k distinct methods with probability proportional to the mix weights.
std::vector<int> sample_methods(const GenerateParams& p, Rng& rng) {
  std::vector<int> pool;
  for (int m = 1; m <= kObfuscationMethods; ++m) {
    if (p.obfuscation_mix[m - 1] > 0.0) pool.push_back(m);
  }
  if (pool.empty()) return {};
  std::size_t k = p.min_obfuscations + rng.below(p.max_obfuscations - p.min_obfuscations + 1);
  k = std::min(k, pool.size());
  std::vector<int> out;
  while (out.size() < k) {
    double total = 0.0;
    for (int m : pool) total += p.obfuscation_mix[m - 1];
    double r = rng.uniform() * total;
    std::size_t idx = 0;
    while (idx + 1 < pool.size() && r >= p.obfuscation_mix[pool[idx] - 1]) {
      r -= p.obfuscation_mix[pool[idx] - 1];
      ++idx;
    }
    out.push_back(pool[idx]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return out;
}

LabeledCommand obfuscated(std::string cmd, const GenerateParams& p, Rng& rng) {
  LabeledCommand out{std::move(cmd), true, Origin::generated, {}};
  std::vector<int> methods = sample_methods(p, rng);
  if (methods.empty()) return out;
  // Encoding wraps everything else, so it always goes last.
  std::stable_partition(methods.begin(), methods.end(), [](int m) { return m != 3; });
  for (int m : methods) {
    if (auto next = apply_obfuscation(m, out.command, rng)) {
      out.command = std::move(*next);
      out.obfuscations.push_back(m);
    }
  }
  if (out.obfuscations.empty()) {
    // Nothing chosen applied; fall back to the first applicable method.
    std::vector<int> rest;
    for (int m = 1; m <= kObfuscationMethods; ++m) {
      if (p.obfuscation_mix[m - 1] > 0.0) rest.push_back(m);
    }
    rng.shuffle(std::span(rest));
    for (int m : rest) {
      if (auto next = apply_obfuscation(m, out.command, rng)) {
        out.command = std::move(*next);
        out.obfuscations.push_back(m);
        break;
      }
    }
  }
  return out;
}

void validate(const GenerateParams& p) {
  if (p.min_obfuscations < 1 || p.max_obfuscations < p.min_obfuscations) {
    throw std::invalid_argument("obfuscation count range must satisfy 1 <= min <= max");
  }
  for (double w : p.obfuscation_mix) {
    if (!(w >= 0.0)) throw std::invalid_argument("obfuscation weights must be >= 0");
  }
}

Origin parse_origin(const std::string& s) {
  if (s == "generated") return Origin::generated;
  if (s == "ingested") return Origin::ingested;
  throw std::invalid_argument("unknown origin \"" + s + "\"");
}

}  // namespace

std::string_view to_string(Origin origin) {
  return origin == Origin::generated ? "generated" : "ingested";
}

TemplateBank TemplateBank::parse(std::string version, std::string_view benign_text,
                                 std::string_view malicious_text, std::string_view fillers_text) {
  TemplateBank bank;
  bank.version = std::move(version);
  for (auto line : content_lines(fillers_text)) {
    const std::size_t eq = line.find('=');
    if (line.front() != '@' || eq == std::string_view::npos) {
      throw std::invalid_argument("template bank: bad filler line: " + std::string(line));
    }
    const std::string name(trim(line.substr(1, eq - 1)));
    auto& choices = bank.fillers[name];
    std::string_view rest = line.substr(eq + 1);
    while (true) {
      const std::size_t bar = rest.find('|');
      const auto choice = trim(rest.substr(0, bar));
      if (!choice.empty()) choices.emplace_back(choice);
      if (bar == std::string_view::npos) break;
      rest.remove_prefix(bar + 1);
    }
    if (choices.empty()) throw std::invalid_argument("template bank: empty filler list " + name);
  }
  for (auto line : content_lines(benign_text)) bank.benign.emplace_back(line);
  for (auto line : content_lines(malicious_text)) bank.malicious.emplace_back(line);
  if (bank.benign.empty() || bank.malicious.empty()) {
    throw std::invalid_argument("template bank " + bank.version + " has no templates");
  }
  for (const auto* list : {&bank.benign, &bank.malicious}) {
    for (const auto& tpl : *list) {
      for_each_placeholder(tpl, [&](std::size_t, std::size_t, std::string_view name) {
        if (!is_builtin(name) && !bank.fillers.count(std::string(name))) {
          throw std::invalid_argument("template bank: unknown placeholder {" + std::string(name) +
                                      "} in: " + tpl);
        }
      });
    }
  }
  for (const char* needed : {"tld", "word", "path", "payloadext", "user"}) {
    if (!bank.fillers.count(needed)) {
      throw std::invalid_argument(std::string("template bank: missing filler list ") + needed);
    }
  }
  return bank;
}

const TemplateBank& TemplateBank::builtin(std::string_view version) {
  static const std::vector<TemplateBank> banks = [] {
    std::vector<TemplateBank> out;
    for (const auto& t : detail::kTemplateBanks) {
      out.push_back(parse(std::string(t.version), t.benign, t.malicious, t.fillers));
    }
    return out;
  }();
  for (const auto& b : banks) {
    if (b.version == version) return b;
  }
  throw std::invalid_argument("unknown template bank version " + std::string(version));
}

std::string CorpusManifest::to_json() const {
  json j;
  j["format"] = kManifestFormat;
  j["seed"] = params.seed;
  j["n_clean"] = params.n_clean;
  j["n_malicious"] = params.n_malicious;
  j["obfuscation_mix"] = params.obfuscation_mix;
  j["min_obfuscations"] = params.min_obfuscations;
  j["max_obfuscations"] = params.max_obfuscations;
  j["template_bank"] = params.template_bank;
  j["counts"] = {{"clean", clean}, {"malicious", malicious}};
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(corpus_hash));
  j["corpus_hash"] = hex;
  return j.dump(2) + "\n";
}

CorpusManifest CorpusManifest::from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.value("format", "") != kManifestFormat) {
      throw std::invalid_argument("manifest: expected format " + std::string(kManifestFormat));
    }
    CorpusManifest m;
    m.params.seed = j.at("seed").get<std::uint64_t>();
    m.params.n_clean = j.at("n_clean").get<std::size_t>();
    m.params.n_malicious = j.at("n_malicious").get<std::size_t>();
    m.params.obfuscation_mix = j.at("obfuscation_mix").get<std::array<double, kObfuscationMethods>>();
    m.params.min_obfuscations = j.at("min_obfuscations").get<std::size_t>();
    m.params.max_obfuscations = j.at("max_obfuscations").get<std::size_t>();
    m.params.template_bank = j.at("template_bank").get<std::string>();
    m.clean = j.at("counts").at("clean").get<std::size_t>();
    m.malicious = j.at("counts").at("malicious").get<std::size_t>();
    m.corpus_hash = std::stoull(j.at("corpus_hash").get<std::string>(), nullptr, 16);
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("manifest: ") + e.what());
  }
}

GeneratedCorpus generate_corpus(const GenerateParams& params) {
  validate(params);
  const TemplateBank& bank = TemplateBank::builtin(params.template_bank);
  GeneratedCorpus out;
  auto& cmds = out.commands;
  cmds.reserve(params.n_clean + params.n_malicious);

  Rng clean_rng(derive_seed(params.seed, kCleanStream));
  Filler clean_fill(bank, clean_rng);
  for (std::size_t i = 0; i < params.n_clean; ++i) {
    cmds.push_back({clean_fill.fill(clean_rng.pick(bank.benign)), false, Origin::generated, {}});
  }
  Rng mal_rng(derive_seed(params.seed, kMaliciousStream));
  Filler mal_fill(bank, mal_rng);
  for (std::size_t i = 0; i < params.n_malicious; ++i) {
    cmds.push_back(obfuscated(mal_fill.fill(mal_rng.pick(bank.malicious)), params, mal_rng));
  }
  Rng shuffle_rng(derive_seed(params.seed, kShuffleStream));
  shuffle_rng.shuffle(std::span(cmds));

  out.manifest.params = params;
  out.manifest.clean = params.n_clean;
  out.manifest.malicious = params.n_malicious;
  out.manifest.corpus_hash = text::fnv1a(to_jsonl(cmds));
  return out;
}

std::string to_jsonl_line(const LabeledCommand& cmd) {
  json j;
  j["command"] = cmd.command;
  j["label"] = cmd.malicious ? "malicious" : "clean";
  j["origin"] = to_string(cmd.origin);
  j["obf"] = cmd.obfuscations;
  // Invalid UTF-8 in ingested text becomes U+FFFD rather than failing.
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string to_jsonl(std::span<const LabeledCommand> corpus) {
  std::string out;
  for (const auto& c : corpus) {
    out += to_jsonl_line(c);
    out += '\n';
  }
  return out;
}

std::vector<LabeledCommand> parse_jsonl(std::istream& in) {
  std::vector<LabeledCommand> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      LabeledCommand c;
      c.command = j.at("command").get<std::string>();
      const auto label = j.at("label").get<std::string>();
      if (label == "malicious") {
        c.malicious = true;
      } else if (label != "clean") {
        throw std::invalid_argument("unknown label \"" + label + "\"");
      }
      c.origin = parse_origin(j.value("origin", std::string("ingested")));
      if (j.contains("obf")) {
        c.obfuscations = j.at("obf").get<std::vector<int>>();
        for (int m : c.obfuscations) obfuscation_name(m);
      }
      out.push_back(std::move(c));
    } catch (const std::exception& e) {
      throw CorpusError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<LabeledCommand> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + path.string());
  try {
    return parse_jsonl(in);
  } catch (const CorpusError& e) {
    throw CorpusError(path.string() + ": " + e.what());
  }
}

void save_jsonl(std::span<const LabeledCommand> corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write " + path.string());
  out << to_jsonl(corpus);
  out.close();
  if (!out) throw CorpusError("write failed: " + path.string());
}

std::vector<LabeledCommand> ingest_lines(std::istream& in, bool malicious) {
  std::vector<LabeledCommand> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    out.push_back({line, malicious, Origin::ingested, {}});
  }
  return out;
}

std::vector<LabeledCommand> balance_training_set(std::span<const LabeledCommand> corpus,
                                                 std::size_t duplication_factor) {
  if (duplication_factor == 0) throw std::invalid_argument("duplication factor must be >= 1");
  std::vector<LabeledCommand> out(corpus.begin(), corpus.end());
  for (std::size_t copy = 1; copy < duplication_factor; ++copy) {
    for (const auto& c : corpus) {
      if (c.malicious) out.push_back(c);
    }
  }
  return out;
}

}  // namespace pshield
