// UTF-8 / UTF-16LE helpers and base64.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pshield::text {

// Invalid sequences decode to U+FFFD, one per offending byte.
std::u32string utf8_decode_lenient(std::string_view s);
std::optional<std::u32string> utf8_decode_strict(std::string_view s);

void utf8_append(std::string& out, char32_t cp);
std::string utf8_encode(std::u32string_view s);

std::vector<std::uint8_t> utf8_to_utf16le(std::string_view s);
// nullopt on odd length or unpaired surrogates.
std::optional<std::string> utf16le_to_utf8(std::span<const std::uint8_t> bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::string base64_encode(std::string_view bytes);
// Standard alphabet. Padding is optional, but a partial quantum of one
// character is rejected, as is any byte outside the alphabet.
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view s);

inline bool is_ascii_upper(char32_t c) { return c >= U'A' && c <= U'Z'; }
inline bool is_ascii_lower(char32_t c) { return c >= U'a' && c <= U'z'; }
inline bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
inline char32_t ascii_lower(char32_t c) { return is_ascii_upper(c) ? c + 32 : c; }

std::string ascii_lower(std::string_view s);

// 64-bit FNV-1a, used for corpus fingerprints.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace pshield::text
