// Character vocabulary and the two deep-model input encodings.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pshield/normalizer.hpp"

namespace pshield {

inline constexpr double kDefaultCharThreshold = 0.014;
inline constexpr std::size_t kDefaultMaxLen = 1024;

class CharVocabulary {
 public:
  // space, a-z and 34 symbols: 61 codes, case-bit row 61.
  static CharVocabulary pinned_default();

  // Characters present in at least `threshold` of the commands get a code.
  // Letters are counted case-folded. Throws std::invalid_argument on an
  // empty corpus or a threshold outside (0, 1).
  static CharVocabulary build(std::span<const NormalizedCommand> corpus,
                              double threshold = kDefaultCharThreshold);

  static CharVocabulary from_json(const std::string& json);
  std::string to_json() const;

  // -1 when the character has no code. Upper-case letters have no code of
  // their own; callers fold them first.
  int code(char32_t c) const;
  char32_t character(int code) const { return chars_.at(static_cast<std::size_t>(code)); }

  std::size_t size() const { return chars_.size(); }
  std::size_t case_bit_row() const { return chars_.size(); }
  std::size_t onehot_rows() const { return chars_.size() + 1; }
  // Code-sequence alphabet: base codes followed by 26 upper-case codes.
  std::size_t sequence_alphabet() const { return chars_.size() + 26; }

  double threshold() const { return threshold_; }
  const std::map<char32_t, double>& doc_frequency() const { return doc_frequency_; }
  const std::vector<char32_t>& characters() const { return chars_; }

  friend bool operator==(const CharVocabulary& a, const CharVocabulary& b) {
    return a.chars_ == b.chars_ && a.threshold_ == b.threshold_;
  }

 private:
  explicit CharVocabulary(std::vector<char32_t> chars, double threshold,
                          std::map<char32_t, double> doc_frequency = {});

  std::vector<char32_t> chars_;
  std::vector<int> ascii_;
  std::map<char32_t, int> other_;
  double threshold_;
  std::map<char32_t, double> doc_frequency_;
};

// Column-sparse (C+1) x max_len binary matrix.
struct OneHotMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t case_bit_row = 0;
  // Filled columns, left-aligned: row index of the character and case bit.
  std::vector<int> codes;
  std::vector<std::uint8_t> upper;

  std::size_t length() const { return codes.size(); }
  double at(std::size_t row, std::size_t col) const;
  // Row-major rows x width dense copy of the first `width` columns.
  void fill_dense(std::span<double> out, std::size_t width, bool case_bit = true) const;
};

struct CodeSequence {
  std::vector<int> codes;
  std::size_t alphabet = 0;
};

OneHotMatrix encode_onehot(const NormalizedCommand& cmd, const CharVocabulary& vocab,
                           std::size_t max_len = kDefaultMaxLen);
CodeSequence encode_codes(const NormalizedCommand& cmd, const CharVocabulary& vocab,
                          std::size_t max_len = kDefaultMaxLen);

}  // namespace pshield
