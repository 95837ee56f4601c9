// Sparse text features for the linear detectors: character n-gram tf-idf
// and bag-of-words term frequency. Both operate on lower-cased text.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pshield/normalizer.hpp"

namespace pshield {

struct SparseFeatureVector {
  // Strictly increasing indices, finite non-zero values.
  std::vector<std::pair<std::uint32_t, double>> entries;
  std::size_t dimension = 0;

  bool empty() const { return entries.empty(); }
};

// Lower-cased sliding-window n-grams over code points, in text order.
std::vector<std::string> char_ngrams(std::string_view text, std::size_t n);

// Maximal runs of ASCII alphanumerics, '$', '-', '*' and non-ASCII code
// points, over lower-cased text.
std::vector<std::string> bow_tokens(std::string_view text);

class NgramVocabulary {
 public:
  // Indices follow the lexicographic order of the grams, so fitting is
  // independent of corpus order. Throws on an empty corpus.
  static NgramVocabulary fit(std::span<const NormalizedCommand> corpus, std::size_t n = 3);

  // tf * (ln((1 + N) / (1 + df)) + 1), L2-normalized. Unknown grams skipped.
  SparseFeatureVector transform_tfidf(const NormalizedCommand& cmd) const;

  std::size_t n() const { return n_; }
  std::size_t size() const { return grams_.size(); }
  std::size_t num_documents() const { return num_documents_; }
  const std::vector<std::string>& grams() const { return grams_; }
  const std::vector<std::uint32_t>& document_frequency() const { return df_; }
  double idf(std::uint32_t index) const;
  // -1 when absent.
  long index_of(const std::string& gram) const;

  std::string to_json() const;
  static NgramVocabulary from_json(const std::string& json);

 private:
  NgramVocabulary(std::size_t n, std::vector<std::string> grams, std::vector<std::uint32_t> df,
                  std::size_t num_documents);

  std::size_t n_ = 3;
  std::vector<std::string> grams_;
  std::vector<std::uint32_t> df_;
  std::size_t num_documents_ = 0;
  std::unordered_map<std::string, std::uint32_t> index_;
};

class TokenVocabulary {
 public:
  static TokenVocabulary fit(std::span<const NormalizedCommand> corpus);

  // Raw counts of known tokens, L1-normalized.
  SparseFeatureVector transform_tf(const NormalizedCommand& cmd) const;

  std::size_t size() const { return tokens_.size(); }
  std::size_t num_documents() const { return num_documents_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  long index_of(const std::string& token) const;

  std::string to_json() const;
  static TokenVocabulary from_json(const std::string& json);

 private:
  TokenVocabulary(std::vector<std::string> tokens, std::size_t num_documents);

  std::vector<std::string> tokens_;
  std::size_t num_documents_ = 0;
  std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace pshield
