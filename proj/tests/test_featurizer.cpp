#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "pshield/featurizer.hpp"
#include "pshield/random.hpp"

using namespace pshield;

namespace {

NormalizedCommand nc(const std::string& s) { return NormalizedCommand{s, false, {}}; }

}  // namespace

TEST_CASE("n-gram vocabulary examples") {
  std::vector<NormalizedCommand> abcd{nc("abcd")};
  const auto v = NgramVocabulary::fit(abcd);
  CHECK(v.grams() == std::vector<std::string>{"abc", "bcd"});
  CHECK(v.document_frequency() == std::vector<std::uint32_t>{1, 1});

  std::vector<NormalizedCommand> aaaa{nc("aaaa")};
  const auto a = NgramVocabulary::fit(aaaa);
  CHECK(a.grams() == std::vector<std::string>{"aaa"});
  CHECK(a.document_frequency() == std::vector<std::uint32_t>{1});

  std::vector<NormalizedCommand> twice{nc("abc"), nc("abc")};
  const auto t = NgramVocabulary::fit(twice);
  CHECK(t.num_documents() == 2);
  CHECK(t.document_frequency()[0] == 2);

  std::vector<NormalizedCommand> shorty{nc("ab")};
  CHECK(NgramVocabulary::fit(shorty).size() == 0);
}

TEST_CASE("tf-idf examples") {
  std::vector<NormalizedCommand> abc{nc("abc")};
  const auto v = NgramVocabulary::fit(abc);
  CHECK(v.idf(0) == doctest::Approx(1.0));
  const auto f = v.transform_tfidf(nc("abc"));
  REQUIRE(f.entries.size() == 1);
  CHECK(f.entries[0].second == doctest::Approx(1.0));
  CHECK(v.transform_tfidf(nc("zzzz")).empty());

  std::vector<NormalizedCommand> aaaa{nc("aaaa")};
  const auto fa = NgramVocabulary::fit(aaaa).transform_tfidf(nc("aaaa"));
  REQUIRE(fa.entries.size() == 1);
  CHECK(fa.entries[0].second == doctest::Approx(1.0));
}

TEST_CASE("bag-of-words examples") {
  CHECK(bow_tokens("iex $env:x") == std::vector<std::string>{"iex", "$env", "x"});
  CHECK(bow_tokens("-NoProfile *.* a_b") == std::vector<std::string>{"-noprofile", "*", "*", "a", "b"});
  std::vector<NormalizedCommand> corpus{nc("a a b")};
  const auto v = TokenVocabulary::fit(corpus);
  const auto f = v.transform_tf(nc("a a b"));
  REQUIRE(f.entries.size() == 2);
  CHECK(f.entries[static_cast<std::size_t>(v.index_of("a"))].second == doctest::Approx(2.0 / 3.0));
  CHECK(f.entries[static_cast<std::size_t>(v.index_of("b"))].second == doctest::Approx(1.0 / 3.0));
  CHECK(v.transform_tf(nc("")).empty());
}

TEST_CASE("feature vector properties on random commands") {
  Rng rng(3);
  const std::string alphabet = "abcXYZ $-*:;'()";
  std::vector<NormalizedCommand> corpus;
  for (int i = 0; i < 60; ++i) {
    std::string s;
    for (std::size_t j = rng.below(30); j > 0; --j) s += alphabet[rng.below(alphabet.size())];
    corpus.push_back(nc(s));
  }
  const auto grams = NgramVocabulary::fit(corpus);
  const auto tokens = TokenVocabulary::fit(corpus);
  for (const auto& c : corpus) {
    // brute-force 3-gram enumeration over lower-cased text
    std::string lower = c.text;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    std::vector<std::string> brute;
    for (std::size_t i = 0; i + 3 <= lower.size(); ++i) brute.push_back(lower.substr(i, 3));
    CHECK(char_ngrams(c.text, 3) == brute);

    const auto tf = grams.transform_tfidf(c);
    if (!tf.empty()) {
      double norm = 0.0;
      for (auto [i, x] : tf.entries) norm += x * x;
      CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto bow = tokens.transform_tf(c);
    if (!bow.empty()) {
      double l1 = 0.0;
      for (auto [i, x] : bow.entries) l1 += std::abs(x);
      CHECK(l1 == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (std::size_t i = 1; i < tf.entries.size(); ++i) CHECK(tf.entries[i - 1].first < tf.entries[i].first);
  }
  auto shuffled = corpus;
  rng.shuffle(std::span(shuffled));
  const auto again = NgramVocabulary::fit(shuffled);
  CHECK(again.grams() == grams.grams());
  CHECK(again.document_frequency() == grams.document_frequency());
  CHECK(NgramVocabulary::from_json(grams.to_json()).grams() == grams.grams());
  CHECK(TokenVocabulary::from_json(tokens.to_json()).tokens() == tokens.tokens());
}
