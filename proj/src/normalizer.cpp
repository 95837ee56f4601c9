#include "pshield/normalizer.hpp"

#include <unordered_set>

#include "pshield/text.hpp"

namespace pshield {
namespace {

constexpr std::string_view kEncodedFlag = "-encodedcommand";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

struct Token {
  std::size_t begin;
  std::size_t end;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    if (i == s.size()) break;
    const std::size_t begin = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    tokens.push_back({begin, i});
  }
  return tokens;
}

// Decoded text must look like command text: no NUL or other C0 controls
// besides tab/CR/LF, and no U+FFFD.
bool plausible_text(std::string_view utf8) {
  const auto cps = text::utf8_decode_strict(utf8);
  if (!cps) return false;
  for (char32_t cp : *cps) {
    if (cp == 0xFFFD) return false;
    if (cp < 0x20 && cp != U'\t' && cp != U'\r' && cp != U'\n') return false;
    if (cp == 0x7F) return false;
  }
  return true;
}

std::optional<std::string> decode_payload(std::string_view token, std::string& why) {
  const auto bytes = text::base64_decode(token);
  if (!bytes) {
    why = "payload is not valid base64";
    return std::nullopt;
  }
  if (bytes->empty()) {
    why = "payload decodes to zero bytes";
    return std::nullopt;
  }
  if (auto utf16 = text::utf16le_to_utf8(*bytes); utf16 && plausible_text(*utf16)) {
    return utf16;
  }
  std::string utf8(bytes->begin(), bytes->end());
  if (plausible_text(utf8)) return utf8;
  why = "payload is neither UTF-16LE nor UTF-8 text";
  return std::nullopt;
}

void append_warning(std::optional<std::string>& warning, const std::string& message) {
  if (warning) {
    *warning += "; " + message;
  } else {
    warning = message;
  }
}

}  // namespace

bool is_encoded_command_flag(std::string_view token) {
  if (token.size() < 2 || token.size() > kEncodedFlag.size()) return false;
  return text::ascii_lower(token) == kEncodedFlag.substr(0, token.size());
}

DecodedCommand decode_encoded_command(const RawCommand& cmd) {
  DecodedCommand result;
  result.command.source_id = cmd.source_id;
  const std::string_view src = cmd.text;
  const auto tokens = tokenize(src);

  std::string out;
  out.reserve(src.size());
  std::size_t copied = 0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const Token flag = tokens[t];
    if (!is_encoded_command_flag(src.substr(flag.begin, flag.end - flag.begin))) continue;
    if (t + 1 == tokens.size()) {
      append_warning(result.decode_warning, "encoded-command flag without a payload");
      break;
    }
    const Token payload = tokens[t + 1];
    std::string why;
    auto decoded =
        decode_payload(src.substr(payload.begin, payload.end - payload.begin), why);
    ++t;
    if (!decoded) {
      append_warning(result.decode_warning, why + " (token " + std::to_string(t) + ")");
      continue;
    }
    out.append(src.substr(copied, flag.begin - copied));
    out.append(*decoded);
    copied = payload.end;
    result.was_base64_decoded = true;
    result.payloads.push_back(std::move(*decoded));
  }
  out.append(src.substr(copied));
  result.command.text = std::move(out);
  return result;
}

NormalizedCommand normalize(const RawCommand& cmd, const NormalizerOptions& options) {
  NormalizedCommand result;
  std::string& out = result.text;
  out.reserve(cmd.text.size());
  bool pending_space = false;
  bool in_digits = false;
  for (char c : cmd.text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      in_digits = false;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (is_digit(c)) {
      if (!in_digits || options.digits == DigitMode::per_digit) out.push_back('*');
      in_digits = true;
      continue;
    }
    in_digits = false;
    out.push_back(c);
  }
  return result;
}

NormalizedCommand normalize(const DecodedCommand& cmd, const NormalizerOptions& options) {
  NormalizedCommand result = normalize(cmd.command, options);
  result.was_base64_decoded = cmd.was_base64_decoded;
  result.decode_warning = cmd.decode_warning;
  return result;
}

NormalizedCommand preprocess(const RawCommand& cmd, const NormalizerOptions& options) {
  DecodedCommand current = decode_encoded_command(cmd);
  bool any_decoded = current.was_base64_decoded;
  for (int depth = 1; depth < options.max_decode_depth && current.was_base64_decoded; ++depth) {
    DecodedCommand next = decode_encoded_command(current.command);
    if (!next.was_base64_decoded) {
      // Keep warnings raised by the innermost level.
      if (next.decode_warning) current.decode_warning = next.decode_warning;
      break;
    }
    current = std::move(next);
  }
  current.was_base64_decoded = any_decoded;
  return normalize(current, options);
}

CaseKey case_key(const NormalizedCommand& cmd) { return CaseKey{text::ascii_lower(cmd.text)}; }

std::vector<NormalizedCommand> dedup_corpus(std::span<const NormalizedCommand> cmds) {
  std::vector<NormalizedCommand> out;
  std::unordered_set<std::string> seen;
  seen.reserve(cmds.size());
  for (const auto& cmd : cmds) {
    if (seen.insert(case_key(cmd).key).second) out.push_back(cmd);
  }
  return out;
}

}  // namespace pshield
