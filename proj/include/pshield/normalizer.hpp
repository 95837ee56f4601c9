// Command-line decoding and canonicalization.
//
// A command goes through decode_encoded_command (splices base64 payloads of
// -EncodedCommand and its prefixes back into the text) and then normalize
// (digits to '*', whitespace runs to one space, edges trimmed). case_key and
// dedup_corpus implement the case-equivalence deduplication.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pshield {

struct RawCommand {
  std::string text;
  std::string source_id;
};

struct DecodedCommand {
  RawCommand command;
  bool was_base64_decoded = false;
  std::optional<std::string> decode_warning;
  // Decoded payloads, in the order they were spliced in.
  std::vector<std::string> payloads;
};

struct NormalizedCommand {
  std::string text;
  bool was_base64_decoded = false;
  std::optional<std::string> decode_warning;

  friend bool operator==(const NormalizedCommand&, const NormalizedCommand&) = default;
};

struct CaseKey {
  std::string key;
  friend bool operator==(const CaseKey&, const CaseKey&) = default;
};

enum class DigitMode {
  run,        // each maximal digit run becomes one '*'
  per_digit,  // every digit becomes '*'
};

struct NormalizerOptions {
  DigitMode digits = DigitMode::run;
  // decode passes applied by preprocess(); nested encodings deeper than this
  // are left in place.
  int max_decode_depth = 4;
};

// True for tokens that are a case-insensitive prefix of "-encodedcommand",
// at least two characters long ("-e", "-en", ..., "-EncodedCommand").
bool is_encoded_command_flag(std::string_view token);

// Never throws. Failed payloads leave the text unchanged and set a warning.
DecodedCommand decode_encoded_command(const RawCommand& cmd);

NormalizedCommand normalize(const RawCommand& cmd, const NormalizerOptions& options = {});
NormalizedCommand normalize(const DecodedCommand& cmd, const NormalizerOptions& options = {});

// Decode (repeatedly, for nested payloads) and then normalize.
NormalizedCommand preprocess(const RawCommand& cmd, const NormalizerOptions& options = {});

CaseKey case_key(const NormalizedCommand& cmd);

// First occurrence of each case-equivalence class, in input order.
std::vector<NormalizedCommand> dedup_corpus(std::span<const NormalizedCommand> cmds);

}  // namespace pshield
