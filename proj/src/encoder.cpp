#include "pshield/encoder.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "pshield/text.hpp"

namespace pshield {
namespace {

// Canonical order: space, a-z, then everything else by code point.
int order_class(char32_t c) {
  if (c == U' ') return 0;
  if (text::is_ascii_lower(c)) return 1;
  return 2;
}

void canonical_sort(std::vector<char32_t>& chars) {
  std::sort(chars.begin(), chars.end(), [](char32_t a, char32_t b) {
    const int ca = order_class(a);
    const int cb = order_class(b);
    return ca != cb ? ca < cb : a < b;
  });
}

std::string char_key(char32_t c) {
  std::string s;
  text::utf8_append(s, c);
  return s;
}

char32_t key_char(const std::string& key) {
  const auto cps = text::utf8_decode_strict(key);
  if (!cps || cps->size() != 1) {
    throw std::invalid_argument("vocabulary key is not a single character: \"" + key + "\"");
  }
  return (*cps)[0];
}

}  // namespace

CharVocabulary::CharVocabulary(std::vector<char32_t> chars, double threshold,
                               std::map<char32_t, double> doc_frequency)
    : chars_(std::move(chars)),
      ascii_(128, -1),
      threshold_(threshold),
      doc_frequency_(std::move(doc_frequency)) {
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    const char32_t c = chars_[i];
    if (text::is_ascii_upper(c)) {
      throw std::invalid_argument("vocabulary must not contain upper-case letters");
    }
    if (c < 128) {
      if (ascii_[c] >= 0) throw std::invalid_argument("duplicate vocabulary character");
      ascii_[c] = static_cast<int>(i);
    } else if (!other_.emplace(c, static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary character");
    }
  }
}

CharVocabulary CharVocabulary::pinned_default() {
  // The 32 ASCII punctuation characters plus two non-ASCII glyphs standing in
  // for the entries that do not survive as ASCII: U+00FB and U+2013 (en dash,
  // which the shell accepts in place of '-').
  std::u32string symbols = U"-'!%&()*,./:;?@[\\]_`{|}+<=>#$^~\"";
  symbols += U'û';
  symbols += U'–';
  std::vector<char32_t> chars{U' '};
  for (char32_t c = U'a'; c <= U'z'; ++c) chars.push_back(c);
  chars.insert(chars.end(), symbols.begin(), symbols.end());
  canonical_sort(chars);
  return CharVocabulary(std::move(chars), kDefaultCharThreshold);
}

CharVocabulary CharVocabulary::build(std::span<const NormalizedCommand> corpus,
                                     double threshold) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("threshold must be in (0, 1)");
  }
  std::map<char32_t, std::size_t> counts;
  std::set<char32_t> present;
  for (const auto& cmd : corpus) {
    present.clear();
    for (char32_t c : text::utf8_decode_lenient(cmd.text)) present.insert(text::ascii_lower(c));
    for (char32_t c : present) ++counts[c];
  }
  const double n = static_cast<double>(corpus.size());
  std::map<char32_t, double> frequency;
  std::vector<char32_t> chars;
  for (const auto& [c, count] : counts) {
    const double f = static_cast<double>(count) / n;
    frequency[c] = f;
    if (f >= threshold) chars.push_back(c);
  }
  canonical_sort(chars);
  return CharVocabulary(std::move(chars), threshold, std::move(frequency));
}

std::string CharVocabulary::to_json() const {
  nlohmann::ordered_json doc;
  doc["threshold"] = threshold_;
  nlohmann::ordered_json codes = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < chars_.size(); ++i) codes[char_key(chars_[i])] = i;
  doc["codes"] = std::move(codes);
  if (!doc_frequency_.empty()) {
    nlohmann::ordered_json df = nlohmann::ordered_json::object();
    for (const auto& [c, f] : doc_frequency_) df[char_key(c)] = f;
    doc["doc_frequency"] = std::move(df);
  }
  return doc.dump(2);
}

CharVocabulary CharVocabulary::from_json(const std::string& json) {
  const auto doc = nlohmann::json::parse(json);
  const double threshold = doc.at("threshold").get<double>();
  const auto& codes = doc.at("codes");
  std::vector<char32_t> chars(codes.size(), 0);
  std::vector<bool> filled(codes.size(), false);
  for (const auto& [key, value] : codes.items()) {
    const auto code = value.get<std::size_t>();
    if (code >= chars.size() || filled[code]) {
      throw std::invalid_argument("vocabulary codes must be distinct and contiguous from 0");
    }
    chars[code] = key_char(key);
    filled[code] = true;
  }
  std::map<char32_t, double> frequency;
  if (doc.contains("doc_frequency")) {
    for (const auto& [key, value] : doc["doc_frequency"].items()) {
      frequency[key_char(key)] = value.get<double>();
    }
  }
  return CharVocabulary(std::move(chars), threshold, std::move(frequency));
}

int CharVocabulary::code(char32_t c) const {
  if (c < 128) return ascii_[c];
  const auto it = other_.find(c);
  return it == other_.end() ? -1 : it->second;
}

double OneHotMatrix::at(std::size_t row, std::size_t col) const {
  if (row >= rows || col >= cols) throw std::out_of_range("OneHotMatrix::at");
  if (col >= codes.size()) return 0.0;
  if (row == case_bit_row) return upper[col] ? 1.0 : 0.0;
  return codes[col] == static_cast<int>(row) ? 1.0 : 0.0;
}

void OneHotMatrix::fill_dense(std::span<double> out, std::size_t width, bool case_bit) const {
  if (out.size() != rows * width) throw std::invalid_argument("fill_dense: bad output size");
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t filled = std::min(width, codes.size());
  for (std::size_t col = 0; col < filled; ++col) {
    out[static_cast<std::size_t>(codes[col]) * width + col] = 1.0;
    if (case_bit && upper[col]) out[case_bit_row * width + col] = 1.0;
  }
}

OneHotMatrix encode_onehot(const NormalizedCommand& cmd, const CharVocabulary& vocab,
                           std::size_t max_len) {
  OneHotMatrix m;
  m.rows = vocab.onehot_rows();
  m.cols = max_len;
  m.case_bit_row = vocab.case_bit_row();
  for (char32_t c : text::utf8_decode_lenient(cmd.text)) {
    if (m.codes.size() == max_len) break;
    const int code = vocab.code(text::ascii_lower(c));
    if (code < 0) continue;
    m.codes.push_back(code);
    m.upper.push_back(text::is_ascii_upper(c) ? 1 : 0);
  }
  return m;
}

CodeSequence encode_codes(const NormalizedCommand& cmd, const CharVocabulary& vocab,
                          std::size_t max_len) {
  CodeSequence seq;
  seq.alphabet = vocab.sequence_alphabet();
  const int base = static_cast<int>(vocab.size());
  for (char32_t c : text::utf8_decode_lenient(cmd.text)) {
    if (seq.codes.size() == max_len) break;
    if (text::is_ascii_upper(c)) {
      if (vocab.code(text::ascii_lower(c)) < 0) continue;
      seq.codes.push_back(base + static_cast<int>(c - U'A'));
      continue;
    }
    const int code = vocab.code(c);
    if (code >= 0) seq.codes.push_back(code);
  }
  return seq;
}

}  // namespace pshield
