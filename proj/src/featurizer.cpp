#include "pshield/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "pshield/text.hpp"

namespace pshield {
namespace {

bool is_token_char(char32_t c) {
  return text::is_ascii_lower(c) || text::is_ascii_upper(c) || text::is_ascii_digit(c) ||
         c == U'$' || c == U'-' || c == U'*' || c >= 128;
}

SparseFeatureVector from_counts(const std::map<std::uint32_t, double>& values,
                                std::size_t dimension) {
  SparseFeatureVector v;
  v.dimension = dimension;
  v.entries.reserve(values.size());
  for (const auto& [index, value] : values) {
    if (value != 0.0) v.entries.emplace_back(index, value);
  }
  return v;
}

}  // namespace

std::vector<std::string> char_ngrams(std::string_view text, std::size_t n) {
  std::vector<std::string> grams;
  if (n == 0) return grams;
  const std::u32string cps = text::utf8_decode_lenient(text);
  if (cps.size() < n) return grams;
  grams.reserve(cps.size() - n + 1);
  for (std::size_t i = 0; i + n <= cps.size(); ++i) {
    std::string gram;
    for (std::size_t k = 0; k < n; ++k) text::utf8_append(gram, text::ascii_lower(cps[i + k]));
    grams.push_back(std::move(gram));
  }
  return grams;
}

std::vector<std::string> bow_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char32_t c : text::utf8_decode_lenient(text)) {
    if (is_token_char(c)) {
      text::utf8_append(current, text::ascii_lower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

NgramVocabulary::NgramVocabulary(std::size_t n, std::vector<std::string> grams,
                                 std::vector<std::uint32_t> df, std::size_t num_documents)
    : n_(n), grams_(std::move(grams)), df_(std::move(df)), num_documents_(num_documents) {
  if (grams_.size() != df_.size()) throw std::invalid_argument("gram/df length mismatch");
  index_.reserve(grams_.size());
  for (std::size_t i = 0; i < grams_.size(); ++i) {
    if (df_[i] == 0) throw std::invalid_argument("n-gram with zero document frequency");
    if (!index_.emplace(grams_[i], static_cast<std::uint32_t>(i)).second) {
      throw std::invalid_argument("duplicate n-gram " + grams_[i]);
    }
  }
}

NgramVocabulary NgramVocabulary::fit(std::span<const NormalizedCommand> corpus, std::size_t n) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  if (n == 0) throw std::invalid_argument("n-gram length must be positive");
  std::map<std::string, std::uint32_t> df;
  std::set<std::string> seen;
  for (const auto& cmd : corpus) {
    seen.clear();
    for (auto& gram : char_ngrams(cmd.text, n)) seen.insert(std::move(gram));
    for (const auto& gram : seen) ++df[gram];
  }
  std::vector<std::string> grams;
  std::vector<std::uint32_t> counts;
  grams.reserve(df.size());
  counts.reserve(df.size());
  for (auto& [gram, count] : df) {
    grams.push_back(gram);
    counts.push_back(count);
  }
  return NgramVocabulary(n, std::move(grams), std::move(counts), corpus.size());
}

double NgramVocabulary::idf(std::uint32_t index) const {
  const double n = static_cast<double>(num_documents_);
  return std::log((1.0 + n) / (1.0 + static_cast<double>(df_.at(index)))) + 1.0;
}

long NgramVocabulary::index_of(const std::string& gram) const {
  const auto it = index_.find(gram);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

SparseFeatureVector NgramVocabulary::transform_tfidf(const NormalizedCommand& cmd) const {
  std::map<std::uint32_t, double> tf;
  for (const auto& gram : char_ngrams(cmd.text, n_)) {
    const auto it = index_.find(gram);
    if (it != index_.end()) tf[it->second] += 1.0;
  }
  double norm = 0.0;
  for (auto& [index, value] : tf) {
    value *= idf(index);
    norm += value * value;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& [index, value] : tf) value /= norm;
  }
  return from_counts(tf, grams_.size());
}

std::string NgramVocabulary::to_json() const {
  nlohmann::ordered_json doc;
  doc["n"] = n_;
  doc["num_documents"] = num_documents_;
  doc["grams"] = grams_;
  doc["df"] = df_;
  return doc.dump();
}

NgramVocabulary NgramVocabulary::from_json(const std::string& json) {
  const auto doc = nlohmann::json::parse(json);
  return NgramVocabulary(doc.at("n").get<std::size_t>(),
                         doc.at("grams").get<std::vector<std::string>>(),
                         doc.at("df").get<std::vector<std::uint32_t>>(),
                         doc.at("num_documents").get<std::size_t>());
}

TokenVocabulary::TokenVocabulary(std::vector<std::string> tokens, std::size_t num_documents)
    : tokens_(std::move(tokens)), num_documents_(num_documents) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::uint32_t>(i)).second) {
      throw std::invalid_argument("duplicate token " + tokens_[i]);
    }
  }
}

TokenVocabulary TokenVocabulary::fit(std::span<const NormalizedCommand> corpus) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  std::set<std::string> all;
  for (const auto& cmd : corpus) {
    for (auto& token : bow_tokens(cmd.text)) all.insert(std::move(token));
  }
  return TokenVocabulary(std::vector<std::string>(all.begin(), all.end()), corpus.size());
}

long TokenVocabulary::index_of(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

SparseFeatureVector TokenVocabulary::transform_tf(const NormalizedCommand& cmd) const {
  std::map<std::uint32_t, double> counts;
  double total = 0.0;
  for (const auto& token : bow_tokens(cmd.text)) {
    const auto it = index_.find(token);
    if (it == index_.end()) continue;
    counts[it->second] += 1.0;
    total += 1.0;
  }
  for (auto& [index, value] : counts) value /= total;
  return from_counts(counts, tokens_.size());
}

std::string TokenVocabulary::to_json() const {
  nlohmann::ordered_json doc;
  doc["num_documents"] = num_documents_;
  doc["tokens"] = tokens_;
  return doc.dump();
}

TokenVocabulary TokenVocabulary::from_json(const std::string& json) {
  const auto doc = nlohmann::json::parse(json);
  return TokenVocabulary(doc.at("tokens").get<std::vector<std::string>>(),
                         doc.at("num_documents").get<std::size_t>());
}

}  // namespace pshield
